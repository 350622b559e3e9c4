#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graybox/bytes.hpp"
#include "graybox/mysql/control.hpp"
#include "graybox/payload/payload.hpp"
#include "graybox/scan/grouping.hpp"
#include "graybox/scan/report.hpp"
#include "graybox/scan/request.hpp"

namespace graybox::scan {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  /// 0 when no response arrived.
  int status = 0;
  HeaderList headers;
  Bytes body;
  std::string error;

  std::optional<std::string> header(std::string_view name) const;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  /// Sends the template to the target. `cookies` override or extend the
  /// template's Cookie header.
  virtual HttpResponse send(const RequestTemplate& request, const std::map<std::string, std::string>& cookies) = 0;
};

/// Plain HTTP via cpp-httplib; redirects are not followed and the request
/// target is sent exactly as serialized.
class HttplibTransport : public HttpTransport {
 public:
  HttplibTransport(std::string base_url, int timeout_ms);
  ~HttplibTransport() override;
  HttpResponse send(const RequestTemplate& request, const std::map<std::string, std::string>& cookies) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LoginConfig {
  std::vector<RequestTemplate> requests;
  /// A response is an authentication failure when its status is listed
  /// here, or it redirects to a Location matching the pattern.
  std::vector<int> reauth_status{401};
  std::string reauth_location_pattern;
};

struct ScanConfig {
  std::string application;
  std::string target = "http://127.0.0.1:8080";
  Endpoint control{"127.0.0.1", 7777};
  std::optional<std::string> control_token;
  Granularity granularity = Granularity::TableColumn;
  std::uint64_t seed = 1;
  bool prune = true;
  bool inject_http = true;
  bool inject_db = true;
  int timeout_ms = 10000;
  std::vector<std::string> skip_url_patterns;
  std::vector<std::string> inject_headers{"Referer", "User-Agent"};
  LoginConfig login;
};

/// Reads the JSON config format documented in the README. Unknown keys are
/// rejected. Throws std::invalid_argument.
ScanConfig scan_config_from_json(const nlohmann::json& j);

/// Maps a stable hash of (template id, injection point) to a payload.
using PayloadFactory = std::function<payload::Payload(std::uint64_t point_hash)>;
/// Deterministic payloads derived from the scan seed.
PayloadFactory seeded_payloads(std::uint64_t seed);

/// Runs the scan strictly sequentially. A control-plane failure aborts the
/// scan and returns the partial report with `aborted` set.
ScanReport run_scan(const std::vector<RequestTemplate>& corpus, const ScanConfig& config,
                    mysql::ControlClient& control, HttpTransport& http, PayloadFactory payloads = {});

}  // namespace graybox::scan
