#pragma once

// Captured wire traces: the raw chunks of one MySQL connection, tagged with
// direction, stored as JSON lines ({"dir":"c2s"|"s2c","data_b64":...}).
// Lines starting with '#' are comments.

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/mysql/proxy_state.hpp"
#include "graybox/net.hpp"

namespace graybox::mysql {

enum class Direction { ClientToServer, ServerToClient };

struct TraceChunk {
  Direction dir = Direction::ClientToServer;
  Bytes data;

  bool operator==(const TraceChunk&) const = default;
};

using Trace = std::vector<TraceChunk>;

std::string serialize_trace(const Trace& trace, std::string_view comment = {});
/// Throws std::invalid_argument on malformed input.
Trace parse_trace(std::string_view text);
Trace read_trace(const std::filesystem::path& path);

/// Concatenated bytes of one direction.
Bytes stream_of(const Trace& trace, Direction dir);

struct ReplayOutput {
  Bytes to_server;
  Bytes to_client;
};

/// Feeds the chunks, in order, through a fresh RelaySession over `state`.
ReplayOutput replay_trace(const Trace& trace, ProxyState& state);

/// Transparent TCP relay that records every connection as a Trace.
class TraceTap {
 public:
  TraceTap(Endpoint listen, Endpoint upstream);
  ~TraceTap();

  void start();
  void stop();
  std::uint16_t port() const { return server_.port(); }
  /// Completed connections in the order they closed.
  std::vector<Trace> traces() const;

 private:
  void serve(net::Socket& client);

  Endpoint upstream_;
  mutable std::mutex mutex_;
  std::vector<Trace> traces_;
  net::TcpServer server_;
};

}  // namespace graybox::mysql
