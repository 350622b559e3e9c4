#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/mysql/protocol.hpp"
#include "graybox/net.hpp"

namespace graybox::mysql {

/// ERR packet returned by the server.
class ServerError : public std::runtime_error {
 public:
  ServerError(std::uint16_t code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  std::uint16_t code() const { return code_; }

 private:
  std::uint16_t code_;
};

struct ResultSet {
  std::vector<ColumnDefinition> columns;
  std::vector<TextRow> rows;
};

struct QueryResult {
  /// One entry per result set; empty for statements that return OK.
  std::vector<ResultSet> result_sets;
  std::uint64_t affected_rows = 0;
};

struct ClientOptions {
  Endpoint endpoint;
  std::string user = "app";
  std::string password;
  std::string database;
  bool request_deprecate_eof = false;
  bool multi_statements = false;
  int timeout_ms = 5000;
};

/// mysql_native_password scramble: SHA1(pw) XOR SHA1(salt + SHA1(SHA1(pw))).
Bytes native_password_scramble(std::string_view password, BytesView salt);

/// Blocking text-protocol client: handshake, COM_QUERY, COM_QUIT.
class Client {
 public:
  static Client connect(const ClientOptions& options);

  Client(Client&&) noexcept = default;
  Client& operator=(Client&&) noexcept = default;
  ~Client();

  QueryResult query(std::string_view sql);
  void ping();
  void close();

  std::uint32_t capabilities() const { return capabilities_; }

 private:
  Client() = default;
  Frame read_frame();
  void send(BytesView payload, std::uint8_t seq);
  ResultSet read_result_set(std::uint64_t column_count, std::uint16_t& status);

  net::Socket socket_;
  FrameReader reader_;
  std::uint32_t capabilities_ = 0;
  bool open_ = false;
};

}  // namespace graybox::mysql
