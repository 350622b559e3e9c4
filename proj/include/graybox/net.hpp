#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include "graybox/bytes.hpp"

namespace graybox::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Owning TCP socket. Reads and writes may run concurrently from two threads
/// (one reader, one writer), which the relay relies on.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket connect(const Endpoint& endpoint, int timeout_ms = 5000);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  /// Returns 0 on orderly shutdown; throws NetError on failure.
  std::size_t read_some(char* buffer, std::size_t size);
  void write_all(BytesView data);
  /// Reads until '\n'; the newline is not returned. nullopt on EOF.
  std::optional<std::string> read_line(Bytes& pending);

  void set_timeout(int timeout_ms);
  void shutdown();
  void close();

 private:
  int fd_ = -1;
};

class Listener {
 public:
  static Listener bind(const Endpoint& endpoint);

  Socket accept();
  std::uint16_t port() const { return port_; }
  /// Wakes a blocked accept().
  void shutdown() { socket_.shutdown(); }
  void close() { socket_.close(); }

 private:
  Socket socket_;
  std::uint16_t port_ = 0;
};

/// Thread-per-connection TCP server.
class TcpServer {
 public:
  using Handler = std::function<void(Socket&)>;

  TcpServer(Endpoint endpoint, Handler handler);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  /// Binds and starts accepting. Throws NetError on bind failure.
  void start();
  void stop();
  std::uint16_t port() const { return listener_.port(); }

 private:
  struct Connection {
    Socket socket;
    std::thread worker;
    std::atomic<bool> finished{false};
  };

  void accept_loop();
  void reap(bool all);

  Endpoint endpoint_;
  Handler handler_;
  Listener listener_;
  std::thread acceptor_;
  std::atomic<bool> running_{false};
  std::mutex mutex_;
  std::list<Connection> connections_;
};

}  // namespace graybox::net
