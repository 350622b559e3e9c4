#include "graybox/mysql/proxy.hpp"

#include <thread>

#include <spdlog/spdlog.h>

#include "graybox/mysql/relay.hpp"

namespace graybox::mysql {

ProxyServer::ProxyServer(ProxyOptions options)
    : options_(std::move(options)),
      handler_(state_, options_.token),
      relay_(options_.listen, [this](net::Socket& s) { serve_client(s); }),
      control_(options_.control, [this](net::Socket& s) { serve_control(s); }) {}

ProxyServer::~ProxyServer() { stop(); }

void ProxyServer::start() {
  relay_.start();
  try {
    control_.start();
  } catch (...) {
    relay_.stop();
    throw;
  }
  spdlog::info("proxy listening on port {}, upstream {}, control on port {}", relay_.port(),
               options_.upstream.to_string(), control_.port());
}

void ProxyServer::stop() {
  relay_.stop();
  control_.stop();
}

void ProxyServer::serve_client(net::Socket& client) {
  net::Socket upstream;
  try {
    upstream = net::Socket::connect(options_.upstream, options_.upstream_connect_timeout_ms);
  } catch (const net::NetError& e) {
    spdlog::warn("upstream unavailable, closing client connection: {}", e.what());
    return;
  }

  RelaySession session(state_);
  std::thread server_to_client([&] {
    char buf[64 * 1024];
    try {
      for (;;) {
        const auto n = upstream.read_some(buf, sizeof buf);
        if (n == 0) break;
        const auto out = session.from_server(BytesView(buf, n));
        if (!out.empty()) client.write_all(out);
      }
    } catch (const net::NetError&) {
    }
    client.shutdown();
    upstream.shutdown();
  });

  char buf[64 * 1024];
  try {
    for (;;) {
      const auto n = client.read_some(buf, sizeof buf);
      if (n == 0) break;
      const auto out = session.from_client(BytesView(buf, n));
      if (!out.empty()) upstream.write_all(out);
    }
  } catch (const net::NetError&) {
  }
  upstream.shutdown();
  client.shutdown();
  server_to_client.join();
}

void ProxyServer::serve_control(net::Socket& socket) {
  Bytes pending;
  while (auto line = socket.read_line(pending)) {
    if (line->empty()) continue;
    socket.write_all(handler_.handle_line(*line) + "\n");
  }
}

}  // namespace graybox::mysql
