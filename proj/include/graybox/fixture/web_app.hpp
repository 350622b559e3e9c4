#pragma once

// Deliberately vulnerable web application used by the integration and
// acceptance tests. Every request opens a fresh database connection (no
// result caching) so the proxy sees each fetch.

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/mysql/client.hpp"

namespace graybox::fixture {

/// One sink of the sanitization matrix.
struct FixtureEndpoint {
  std::string path;
  /// Context chain the value lands in, e.g. "HTML double-quoted attribute".
  std::string sink;
  /// none | html-entity | backslash | url-encode | strip-angles | correct-for-context
  std::string sanitizer;
  bool correct = false;
  /// Row of the whitelist table this endpoint exercises; empty for sinks
  /// outside the whitelist.
  std::string whitelist_row;
  /// snippets.slot read by the endpoint.
  std::string slot;
};

const std::vector<FixtureEndpoint>& matrix_endpoints();

/// Running-example page and the granularity/session endpoints.
inline constexpr const char* kTopicPath = "/topic";
inline constexpr const char* kDashboardPath = "/dashboard";
inline constexpr const char* kProfilePath = "/profile";
inline constexpr const char* kPagePath = "/page";
inline constexpr const char* kLoginPath = "/login";
inline constexpr const char* kAccountPath = "/account";
inline constexpr const char* kReflectPath = "/reflect";

inline constexpr const char* kLoginUser = "admin";
inline constexpr const char* kLoginPassword = "fixture-pass";
inline constexpr const char* kAuthCookie = "auth";

/// Drop-and-recreate of every fixture table over the wire.
void seed_database(const mysql::ClientOptions& db);
/// The statements seed_database runs, in order.
std::vector<std::string> seed_statements();
/// Rows per table after seeding.
std::map<std::string, std::size_t> seeded_row_counts();

struct WebAppOptions {
  Endpoint listen{"127.0.0.1", 0};
  /// Where the application's database connections go (normally the proxy).
  mysql::ClientOptions db;
};

class WebApp {
 public:
  explicit WebApp(WebAppOptions options);
  ~WebApp();

  /// Binds and serves on a background thread. Throws std::runtime_error on
  /// bind failure.
  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  std::string base_url() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  WebAppOptions options_;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

}  // namespace graybox::fixture
