#include "graybox/scan/scanner.hpp"

#include <chrono>
#include <regex>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "graybox/context/context.hpp"
#include "graybox/payload/pattern.hpp"
#include "graybox/verify/verifier.hpp"

namespace graybox::scan {

std::optional<std::string> HttpResponse::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals_ascii(k, name)) return v;
  }
  return std::nullopt;
}

// ---- transport -------------------------------------------------------------

struct HttplibTransport::Impl {
  explicit Impl(const std::string& base) : client(base) {}
  httplib::Client client;
};

HttplibTransport::HttplibTransport(std::string base_url, int timeout_ms) : impl_(std::make_unique<Impl>(base_url)) {
  auto& c = impl_->client;
  c.set_url_encode(false);
  c.set_follow_location(false);
  c.set_keep_alive(false);
  const auto sec = timeout_ms / 1000;
  const auto usec = (timeout_ms % 1000) * 1000;
  c.set_connection_timeout(sec, usec);
  c.set_read_timeout(sec, usec);
  c.set_write_timeout(sec, usec);
}

HttplibTransport::~HttplibTransport() = default;

HttpResponse HttplibTransport::send(const RequestTemplate& request, const std::map<std::string, std::string>& cookies) {
  httplib::Request req;
  req.method = request.method;
  req.path = request.target();
  for (const auto& [k, v] : request.headers) {
    if (iequals_ascii(k, "host") || iequals_ascii(k, "content-length") || iequals_ascii(k, "connection") ||
        iequals_ascii(k, "accept-encoding")) {
      continue;
    }
    req.headers.emplace(k, v);
  }
  // Cookie header: template cookies, with session cookies overriding and
  // extending them.
  std::string cookie;
  std::set<std::string> seen;
  for (const auto& p : request.cookies) {
    if (!cookie.empty()) cookie += "; ";
    const auto it = cookies.find(p.name);
    if (it != cookies.end()) {
      cookie += p.name + "=" + it->second;
    } else {
      cookie += p.raw_name.substr(p.raw_name.find_first_not_of(' ') == std::string::npos
                                      ? 0
                                      : p.raw_name.find_first_not_of(' '));
      if (p.has_equals) cookie += "=" + p.raw_value;
    }
    seen.insert(p.name);
  }
  for (const auto& [name, value] : cookies) {
    if (seen.count(name)) continue;
    if (!cookie.empty()) cookie += "; ";
    cookie += name + "=" + value;
  }
  if (!cookie.empty()) req.headers.emplace("Cookie", cookie);
  req.body = request.serialized_body();
  if (!req.body.empty() && !req.has_header("Content-Type")) {
    req.headers.emplace("Content-Type", "application/octet-stream");
  }

  HttpResponse out;
  auto result = impl_->client.send(req);
  if (!result) {
    out.error = httplib::to_string(result.error());
    return out;
  }
  out.status = result->status;
  for (const auto& [k, v] : result->headers) out.headers.emplace_back(k, v);
  out.body = result->body;
  return out;
}

// ---- config ----------------------------------------------------------------

ScanConfig scan_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKeys = {
      "application", "target",      "control",        "control_token",     "granularity",   "seed", "prune",
      "inject_http", "inject_db",   "timeout_ms",     "skip_url_patterns", "inject_headers", "login"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!kKeys.count(k)) throw std::invalid_argument("unknown config key: " + k);
  }
  ScanConfig c;
  try {
    c.application = j.value("application", c.application);
    c.target = j.value("target", c.target);
    if (j.contains("control")) c.control = parse_endpoint(j.at("control").get<std::string>());
    if (j.contains("control_token")) c.control_token = j.at("control_token").get<std::string>();
    if (j.contains("granularity")) {
      const auto g = parse_granularity(j.at("granularity").get<std::string>());
      if (!g) throw std::invalid_argument("unknown granularity");
      c.granularity = *g;
    }
    c.seed = j.value("seed", c.seed);
    c.prune = j.value("prune", c.prune);
    c.inject_http = j.value("inject_http", c.inject_http);
    c.inject_db = j.value("inject_db", c.inject_db);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.skip_url_patterns = j.value("skip_url_patterns", c.skip_url_patterns);
    c.inject_headers = j.value("inject_headers", c.inject_headers);
    if (const auto it = j.find("login"); it != j.end()) {
      if (!it->is_object()) throw std::invalid_argument("login must be an object");
      for (const auto& [k, _] : it->items()) {
        if (k != "requests" && k != "reauth_status" && k != "reauth_location_pattern") {
          throw std::invalid_argument("unknown login key: " + k);
        }
      }
      std::size_t n = 0;
      for (const auto& r : it->value("requests", nlohmann::json::array())) {
        c.login.requests.push_back(template_from_json(r, "login-" + std::to_string(++n)));
      }
      c.login.reauth_status = it->value("reauth_status", c.login.reauth_status);
      c.login.reauth_location_pattern = it->value("reauth_location_pattern", std::string{});
    }
    for (const auto& p : c.skip_url_patterns) std::regex{p};
    if (!c.login.reauth_location_pattern.empty()) std::regex{c.login.reauth_location_pattern};
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  } catch (const std::regex_error& e) {
    throw std::invalid_argument(std::string("config pattern: ") + e.what());
  } catch (const CorpusError& e) {
    throw std::invalid_argument(std::string("config login request: ") + e.what());
  }
  return c;
}

PayloadFactory seeded_payloads(std::uint64_t seed) {
  return [seed](std::uint64_t index) {
    // splitmix64 step so that neighbouring (seed, index) pairs diverge
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + index + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return payload::generate_payload(z ^ (z >> 31));
  };
}

// ---- scan ------------------------------------------------------------------

namespace {

std::vector<std::string> set_cookie_pairs(const HttpResponse& r) {
  std::vector<std::string> out;
  for (const auto& [k, v] : r.headers) {
    if (iequals_ascii(k, "set-cookie")) out.push_back(v.substr(0, v.find(';')));
  }
  return out;
}

class Scan {
 public:
  Scan(const ScanConfig& config, mysql::ControlClient& control, HttpTransport& http, PayloadFactory payloads)
      : config_(config), control_(control), http_(http), payloads_(std::move(payloads)) {
    if (!payloads_) payloads_ = seeded_payloads(config.seed);
    if (!config.login.reauth_location_pattern.empty()) {
      reauth_location_ = std::regex(config.login.reauth_location_pattern);
    }
    for (const auto& p : config.skip_url_patterns) skip_.emplace_back(p);
    report_.application = config.application;
    report_.granularity = config.granularity;
    report_.seed = config.seed;
    report_.prune = config.prune;
  }

  ScanReport run(const std::vector<RequestTemplate>& corpus) {
    const auto started = std::chrono::steady_clock::now();
    try {
      control_.set_mode(mysql::ProxyMode::Passthrough);
      control_.clear();
      login();
      for (const auto& t : corpus) scan_template(t);
    } catch (const mysql::ControlError& e) {
      report_.aborted = true;
      report_.abort_reason = std::string("proxy control failure: ") + e.what();
      spdlog::error("{}", report_.abort_reason);
    }
    report_.counters.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return std::move(report_);
  }

 private:
  HttpResponse send_raw(const RequestTemplate& t, const std::string& own_cookie = {}) {
    auto jar = jar_;
    // A mutated cookie must reach the application as mutated.
    if (!own_cookie.empty()) jar.erase(own_cookie);
    auto r = http_.send(t, jar);
    ++report_.counters.http_requests;
    if (r.status == 0) {
      ++report_.counters.transport_errors;
      spdlog::warn("{} {}: no response ({})", t.method, t.target(), r.error);
    } else if (r.status >= 500) {
      ++report_.counters.responses_5xx;
      spdlog::info("{} {}: HTTP {}", t.method, t.target(), r.status);
    }
    return r;
  }

  bool auth_failed(const HttpResponse& r) const {
    if (config_.login.requests.empty()) return false;
    for (const int s : config_.login.reauth_status) {
      if (r.status == s) return true;
    }
    if (reauth_location_ && r.status >= 300 && r.status < 400) {
      if (const auto loc = r.header("location")) return std::regex_search(*loc, *reauth_location_);
    }
    return false;
  }

  void login() {
    for (const auto& t : config_.login.requests) {
      const auto r = send_raw(t);
      ++report_.counters.login_requests;
      for (const auto& pair : set_cookie_pairs(r)) {
        const auto eq = pair.find('=');
        if (eq != std::string::npos) jar_[pair.substr(0, eq)] = pair.substr(eq + 1);
      }
    }
  }

  /// Sends once; on an authentication failure logs in again and retries.
  HttpResponse send(const RequestTemplate& t, const std::string& own_cookie = {}) {
    auto r = send_raw(t, own_cookie);
    if (auth_failed(r)) {
      ++report_.counters.reauthentications;
      login();
      r = send_raw(t, own_cookie);
    }
    return r;
  }

  bool skipped(const RequestTemplate& t) const {
    const auto url = t.url();
    for (const auto& re : skip_) {
      if (std::regex_search(url, re)) return true;
    }
    return false;
  }

  void scan_template(const RequestTemplate& t) {
    if (skipped(t)) {
      ++report_.counters.skipped_templates;
      return;
    }
    spdlog::info("scanning {} {} {}", t.id, t.method, t.target());

    // Baseline with recording.
    control_.clear();
    control_.set_mode(mysql::ProxyMode::Recording);
    const auto baseline = send(t);
    ++report_.counters.baseline_replays;
    control_.set_mode(mysql::ProxyMode::Passthrough);
    const auto events = control_.get_events();
    report_.counters.fetch_events += events.size();

    if (config_.inject_http) {
      for (const auto& point : http_points(t, config_.inject_headers)) {
        const auto p = payload_for(t, point);
        RequestTemplate mutated;
        try {
          mutated = mutate_http(t, point, p);
        } catch (const LocatorNotFound& e) {
          ++report_.counters.skipped_points;
          spdlog::warn("{}: {}", t.id, e.what());
          continue;
        }
        const auto r = send(mutated, point.kind == PointKind::Cookie ? point.locator : std::string{});
        ++report_.counters.mutated_replays;
        analyze(r, p, t, point);
      }
    }

    if (config_.inject_db) {
      auto groups = group_fetches(events, config_.granularity);
      report_.counters.groups_total += groups.size();
      for (const auto& group : groups) {
        if (config_.prune && !echoed_in(group, baseline.body)) {
          ++report_.counters.groups_pruned;
          continue;
        }
        const InjectionPoint point{PointKind::DbFetchGroup, group.key.locator()};
        const auto p = payload_for(t, point);
        control_.set_specs({spec_for_group(group.key, p.text)});
        control_.set_mode(mysql::ProxyMode::Injecting);
        HttpResponse r;
        try {
          r = send(t);
        } catch (...) {
          control_.set_mode(mysql::ProxyMode::Passthrough);
          throw;
        }
        control_.set_mode(mysql::ProxyMode::Passthrough);
        control_.set_specs({});
        ++report_.counters.mutated_replays;
        analyze(r, p, t, point);
      }
    }
    control_.clear();
  }

  static bool echoed_in(const FetchGroup& group, BytesView body) {
    for (const auto& v : group.values) {
      const auto probe = payload::prefix_probe(v);
      if (!probe) return true;  // too little text to judge
      if (payload::Matcher(probe->pattern).found_in(body)) return true;
    }
    return false;
  }

  /// The payload depends only on the seed and the injection point, so a point
  /// gets the same payload at every granularity and pruning setting.
  payload::Payload payload_for(const RequestTemplate& t, const InjectionPoint& point) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (const char c : t.id + '\n' + std::string(to_string(point.kind)) + '\n' + point.locator) {
      h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    }
    return payloads_(h);
  }

  void analyze(const HttpResponse& r, const payload::Payload& p, const RequestTemplate& t, const InjectionPoint& point) {
    const std::size_t replay = ++replay_index_;
    if (r.status == 0) return;
    const auto matches = payload::find_matches(r.body, {payload::derive_pattern(p)}, placeholders_);
    if (matches.empty()) return;
    const auto body = payload::substitute_placeholders(r.body, matches);
    std::vector<std::string> tokens;
    for (const auto& m : matches) tokens.push_back(m.placeholder);
    for (const auto& ctx : context::compute_contexts(body, tokens)) {
      const auto m = std::find_if(matches.begin(), matches.end(),
                                  [&](const payload::PayloadMatch& x) { return x.placeholder == ctx.placeholder; });
      if (m == matches.end()) continue;
      const auto verdict = verify::verify(m->matched_bytes, ctx);
      if (verdict.outcome == verify::Outcome::CorrectSanitization) {
        ++report_.tallies.correct;
        continue;
      }
      ++report_.tallies.incorrect[verdict.outcome];
      Finding f;
      f.replay_index = replay;
      f.request_id = t.id;
      f.point = point;
      f.payload_id = p.id;
      f.payload_text = p.text;
      f.matched = m->matched_bytes;
      for (const auto& n : ctx.chain) {
        ChainNode cn{std::string(context::to_string(n.kind)), n.detail, std::nullopt};
        if (n.position) cn.position = std::string(context::to_string(*n.position));
        f.chain.push_back(std::move(cn));
      }
      f.outcome = verdict.outcome;
      f.failing_node = verdict.failing_node.value_or(0);
      f.evidence = verdict.evidence;
      for (const auto& step : verdict.trace) {
        if (!step.escaped) f.decoded_steps.push_back(step.node_text_decoded);
      }
      f.response_status = r.status;
      report_.findings.push_back(std::move(f));
    }
  }

  const ScanConfig& config_;
  mysql::ControlClient& control_;
  HttpTransport& http_;
  PayloadFactory payloads_;
  std::optional<std::regex> reauth_location_;
  std::vector<std::regex> skip_;
  std::map<std::string, std::string> jar_;
  payload::PlaceholderAllocator placeholders_;
  std::size_t replay_index_ = 0;
  ScanReport report_;
};

}  // namespace

ScanReport run_scan(const std::vector<RequestTemplate>& corpus, const ScanConfig& config,
                    mysql::ControlClient& control, HttpTransport& http, PayloadFactory payloads) {
  Scan scan(config, control, http, std::move(payloads));
  return scan.run(corpus);
}

}  // namespace graybox::scan
