#pragma once

#include <optional>
#include <string>

#include "graybox/bytes.hpp"
#include "graybox/mysql/control.hpp"
#include "graybox/mysql/proxy_state.hpp"
#include "graybox/net.hpp"

namespace graybox::mysql {

struct ProxyOptions {
  Endpoint listen;
  Endpoint upstream;
  Endpoint control;
  std::optional<std::string> token;
  int upstream_connect_timeout_ms = 3000;
};

/// Wire-level man-in-the-middle between an application and a MySQL server.
/// Application connections are relayed through RelaySession; the control
/// endpoint drives the shared ProxyState.
class ProxyServer {
 public:
  explicit ProxyServer(ProxyOptions options);
  ~ProxyServer();

  /// Binds both endpoints. Throws net::NetError when either cannot be bound.
  void start();
  void stop();

  std::uint16_t listen_port() const { return relay_.port(); }
  std::uint16_t control_port() const { return control_.port(); }
  ProxyState& state() { return state_; }

 private:
  void serve_client(net::Socket& client);
  void serve_control(net::Socket& socket);

  ProxyOptions options_;
  ProxyState state_;
  ControlHandler handler_;
  net::TcpServer relay_;
  net::TcpServer control_;
};

}  // namespace graybox::mysql
