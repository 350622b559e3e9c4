// graybox: database-response XSS scanner front end.
//
//   graybox proxy   --listen :3307 --upstream 127.0.0.1:3306 --control :7777
//   graybox scan    --corpus corpus.jsonl [--config scan.json] [--granularity table-column] [--out report.jsonl]
//   graybox fixture --db-listen :3306 --web-listen :8080 --app-db 127.0.0.1:3307

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "graybox/fixture/db_server.hpp"
#include "graybox/fixture/web_app.hpp"
#include "graybox/mysql/control.hpp"
#include "graybox/mysql/proxy.hpp"
#include "graybox/scan/scanner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEnvironment = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

graybox::Endpoint endpoint_arg(const std::string& flag, const std::string& text) {
  try {
    return graybox::parse_endpoint(text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::optional<std::string> env_token() {
  if (const char* t = std::getenv(graybox::mysql::kControlTokenEnv); t && *t) return std::string(t);
  return std::nullopt;
}

/// Blocks until SIGINT or SIGTERM.
void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  spdlog::info("signal {}, shutting down", sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

struct ProxyArgs {
  std::string listen = ":3307";
  std::string upstream;
  std::string control = "127.0.0.1:7777";
};

int run_proxy(const ProxyArgs& a) {
  graybox::mysql::ProxyOptions options;
  options.listen = endpoint_arg("--listen", a.listen);
  options.upstream = endpoint_arg("--upstream", a.upstream);
  options.control = endpoint_arg("--control", a.control);
  options.token = env_token();
  graybox::mysql::ProxyServer proxy(options);
  try {
    proxy.start();
  } catch (const std::exception& e) {
    spdlog::error("cannot start proxy: {}", e.what());
    return 1;
  }
  if (options.token) spdlog::info("control messages must carry the token from {}", graybox::mysql::kControlTokenEnv);
  wait_for_signal();
  proxy.stop();
  return kExitOk;
}

struct ScanArgs {
  std::string corpus;
  std::string config;
  std::string granularity;
  std::string out;
  std::string format = "jsonl";
  std::string summary_json;
  std::string target;
  std::string control;
  std::optional<std::uint64_t> seed;
  bool no_prune = false;
};

int run_scan(const ScanArgs& a) {
  namespace scan = graybox::scan;
  std::vector<scan::RequestTemplate> corpus;
  try {
    corpus = scan::load_corpus(a.corpus);
  } catch (const std::exception& e) {
    spdlog::error("cannot read corpus {}: {}", a.corpus, e.what());
    return kExitUsage;
  }

  scan::ScanConfig config;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) {
      spdlog::error("cannot read config {}", a.config);
      return kExitUsage;
    }
    try {
      config = scan::scan_config_from_json(nlohmann::json::parse(in));
    } catch (const std::exception& e) {
      spdlog::error("invalid config {}: {}", a.config, e.what());
      return kExitUsage;
    }
  }
  if (!a.granularity.empty()) {
    const auto g = scan::parse_granularity(a.granularity);
    if (!g) throw UsageError("--granularity must be individual, table-column, table or all");
    config.granularity = *g;
  }
  if (a.seed) config.seed = *a.seed;
  if (a.no_prune) config.prune = false;
  if (!a.target.empty()) config.target = a.target;
  if (!a.control.empty()) config.control = endpoint_arg("--control", a.control);
  if (!config.control_token) config.control_token = env_token();
  if (a.format != "jsonl" && a.format != "text") throw UsageError("--format must be jsonl or text");

  graybox::mysql::ControlClient control(config.control, config.control_token, config.timeout_ms);
  try {
    control.get_diagnostics();
  } catch (const graybox::mysql::ControlError& e) {
    spdlog::error("proxy control endpoint {} unreachable: {}", config.control.to_string(), e.what());
    return kExitEnvironment;
  }

  scan::HttplibTransport http(config.target, config.timeout_ms);
  const auto report = scan::run_scan(corpus, config, control, http);

  const auto rendered = a.format == "jsonl" ? scan::render_jsonl(report) : scan::render_text(report);
  if (a.out.empty() || a.out == "-") {
    std::cout << rendered;
  } else {
    std::ofstream out(a.out, std::ios::binary);
    out << rendered;
    if (!out) {
      spdlog::error("cannot write {}", a.out);
      return kExitEnvironment;
    }
  }
  if (!a.summary_json.empty()) {
    std::ofstream out(a.summary_json);
    out << scan::summary_json(report).dump(2) << "\n";
  }
  // The human summary goes to stderr whenever stdout carries the report.
  if (a.format == "jsonl") {
    ((a.out.empty() || a.out == "-") ? std::cerr : std::cout) << scan::render_text(report);
  }
  return report.aborted ? kExitEnvironment : kExitOk;
}

struct FixtureArgs {
  std::string db_listen = "127.0.0.1:3306";
  std::string web_listen = "127.0.0.1:8080";
  std::string app_db;
};

int run_fixture(const FixtureArgs& a) {
  namespace fx = graybox::fixture;
  fx::DbServerOptions db_options;
  db_options.listen = endpoint_arg("--db-listen", a.db_listen);
  fx::DbServer db(db_options, std::make_shared<fx::Database>());
  fx::WebAppOptions web_options;
  web_options.listen = endpoint_arg("--web-listen", a.web_listen);
  try {
    db.start();
    graybox::mysql::ClientOptions direct;
    direct.endpoint = {"127.0.0.1", db.port()};
    direct.password = db_options.users.begin()->second;
    direct.user = db_options.users.begin()->first;
    fx::seed_database(direct);
    web_options.db = direct;
    if (!a.app_db.empty()) web_options.db.endpoint = endpoint_arg("--app-db", a.app_db);
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    spdlog::error("cannot start fixture database: {}", e.what());
    return 1;
  }
  fx::WebApp web(web_options);
  try {
    web.start();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  spdlog::info("fixture database on port {}, web app at {} (database via {})", db.port(), web.base_url(),
               web_options.db.endpoint.to_string());
  wait_for_signal();
  web.stop();
  db.stop();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("graybox"));
  block_signals();

  CLI::App app{"Gray-box XSS scanner driven by database response injection"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  ProxyArgs proxy_args;
  auto* proxy = app.add_subcommand("proxy", "Run the intercepting MySQL proxy");
  proxy->add_option("--listen", proxy_args.listen, "Application-facing endpoint")->capture_default_str();
  proxy->add_option("--upstream", proxy_args.upstream, "Database server endpoint")->required();
  proxy->add_option("--control", proxy_args.control, "Control endpoint")->capture_default_str();

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Replay a request corpus with HTTP and database injection");
  scan->add_option("--corpus", scan_args.corpus, "Request corpus (.jsonl or .har)")->required();
  scan->add_option("--config", scan_args.config, "Scan configuration JSON");
  scan->add_option("--granularity", scan_args.granularity, "individual|table-column|table|all");
  scan->add_option("--out", scan_args.out, "Report path (default stdout)");
  scan->add_option("--format", scan_args.format, "jsonl|text")->capture_default_str();
  scan->add_option("--summary-json", scan_args.summary_json, "Write tallies and counters as JSON");
  scan->add_option("--seed", scan_args.seed, "Payload seed");
  scan->add_option("--target", scan_args.target, "Base URL of the application");
  scan->add_option("--control", scan_args.control, "Proxy control endpoint");
  scan->add_flag("--no-prune", scan_args.no_prune, "Inject every fetch group, echoed or not");

  FixtureArgs fixture_args;
  auto* fixture = app.add_subcommand("fixture", "Run the seeded fixture database and web application");
  fixture->add_option("--db-listen", fixture_args.db_listen, "Fixture database endpoint")->capture_default_str();
  fixture->add_option("--web-listen", fixture_args.web_listen, "Fixture web endpoint")->capture_default_str();
  fixture->add_option("--app-db", fixture_args.app_db,
                      "Endpoint the web app uses for its database (normally the proxy)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*proxy) return run_proxy(proxy_args);
    if (*scan) return run_scan(scan_args);
    if (*fixture) return run_fixture(fixture_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
