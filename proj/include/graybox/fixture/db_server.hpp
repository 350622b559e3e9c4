#pragma once

// A small MySQL-protocol server over the in-memory Database. It speaks the
// protocol-10 handshake with mysql_native_password, COM_QUERY (text result
// sets, optional multi-statements), COM_PING, COM_INIT_DB and COM_QUIT.

#include <atomic>
#include <map>
#include <memory>
#include <string>

#include "graybox/fixture/sql_engine.hpp"
#include "graybox/net.hpp"

namespace graybox::fixture {

struct DbServerOptions {
  Endpoint listen{"127.0.0.1", 0};
  std::map<std::string, std::string> users{{"app", "app-secret"}};
  bool offer_deprecate_eof = true;
  /// Also advertise SSL and compression so tests can see the proxy strip them.
  bool advertise_refused_caps = true;
};

class DbServer {
 public:
  DbServer(DbServerOptions options, std::shared_ptr<Database> db);
  ~DbServer();

  void start();
  void stop();
  std::uint16_t port() const { return server_.port(); }
  Database& database() { return *db_; }
  std::uint64_t queries_served() const { return queries_.load(); }

 private:
  void serve(net::Socket& socket);

  DbServerOptions options_;
  std::shared_ptr<Database> db_;
  net::TcpServer server_;
  std::atomic<std::uint32_t> next_connection_id_{1};
  std::atomic<std::uint64_t> queries_{0};
};

}  // namespace graybox::fixture
