#include "graybox/fixture/web_app.hpp"

#include <cctype>
#include <functional>
#include <stdexcept>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "graybox/fixture/sanitizers.hpp"

namespace graybox::fixture {

namespace {

using Sanitizer = std::function<std::string(std::string_view)>;
using Sink = std::function<std::string(const std::string&)>;

struct MatrixRow {
  std::string slot;
  std::string sink_description;
  std::string whitelist_row;
  Sink render;
  std::string vulnerable_label;
  std::string vulnerable_sanitizer;
  Sanitizer vulnerable;
  /// Absent for sinks no sanitizer can make acceptable.
  Sanitizer correct;
  std::string seed;
};

std::string entities(std::string_view v) { return html_entities(v, QuoteMode::Quotes); }

const std::vector<MatrixRow>& matrix() {
  static const std::vector<MatrixRow> rows = {
      {"htmltext", "HTML text", "HTML text",
       [](const std::string& v) { return "<p class=\"note\">" + v + "</p>"; }, "unsanitized", "none",
       [](std::string_view v) { return std::string(v); }, entities, "Quarterly <b>report</b> draft"},
      {"attr-double", "HTML double-quoted attribute", "HTML double-quoted attribute value",
       [](const std::string& v) { return "<input type=\"text\" name=\"note\" value=\"" + v + "\">"; }, "noquotes",
       "html-entity", [](std::string_view v) { return html_entities(v, QuoteMode::NoQuotes); }, entities,
       "Release notes for version 2"},
      {"attr-single", "HTML single-quoted attribute", "HTML single-quoted attribute value",
       [](const std::string& v) { return "<input type='text' name='note' value='" + v + "'>"; }, "compat",
       "html-entity", [](std::string_view v) { return html_entities(v, QuoteMode::Compat); }, entities,
       "Team offsite agenda"},
      {"script-data", "script element > JavaScript single-quoted string", "HTML data",
       [](const std::string& v) { return "<script>var note = '" + v + "';</script>"; }, "addslashes", "backslash",
       [](std::string_view v) { return addslashes(v); }, [](std::string_view v) { return js_hex_escape(v); },
       "Budget review pending"},
      {"uri-start", "HTML double-quoted attribute > URI (beginning)", "URI",
       [](const std::string& v) { return "<a href=\"" + v + "\">open</a>"; }, "entities", "html-entity", entities,
       [](std::string_view v) { return entities(rawurlencode(v)); }, "https://example.org/handbook"},
      {"uri-query", "HTML double-quoted attribute > URI (elsewhere)", "URI",
       [](const std::string& v) { return "<a href=\"/search?q=" + v + "\">search</a>"; }, "entities", "html-entity",
       entities, [](std::string_view v) { return entities(rawurlencode(v)); }, "release planning"},
      {"js-double", "HTML single-quoted attribute > JavaScript double-quoted string",
       "JavaScript double-quoted string",
       [](const std::string& v) { return "<button onclick='show(\"" + v + "\")'>show</button>"; }, "entities",
       "html-entity", entities, [](std::string_view v) { return entities(js_hex_escape(v)); },
       "Sprint retrospective notes"},
      {"js-single", "HTML double-quoted attribute > JavaScript single-quoted string",
       "JavaScript single-quoted string",
       [](const std::string& v) { return "<button onclick=\"show('" + v + "')\">show</button>"; }, "entities",
       "html-entity", entities, [](std::string_view v) { return entities(js_hex_escape(v)); },
       "Backlog grooming session"},
      {"css-double", "HTML single-quoted attribute > CSS double-quoted string", "CSS double-quoted string",
       [](const std::string& v) { return "<div style='content: \"" + v + "\"'>note</div>"; }, "entities",
       "html-entity", entities, [](std::string_view v) { return entities(css_hex_escape(v)); },
       "Pinned announcement"},
      {"css-single", "style element > CSS single-quoted string", "CSS single-quoted string",
       [](const std::string& v) { return "<style>.note::after { content: '" + v + "'; }</style>"; }, "stripangles",
       "strip-angles", [](std::string_view v) { return strip_angles(v); },
       [](std::string_view v) { return css_hex_escape(v); }, "Draft status banner"},
      {"attr-unquoted", "HTML unquoted attribute", "",
       [](const std::string& v) { return "<input name=note value=" + v + ">"; }, "entities", "html-entity", entities,
       nullptr, "Roadmap"},
      {"css-value", "HTML double-quoted attribute > CSS property value", "",
       [](const std::string& v) { return "<div style=\"color: " + v + "\">note</div>"; }, "entities", "html-entity",
       entities, nullptr, "darkslateblue"},
      {"js-uri", "HTML single-quoted attribute > javascript: URI > JavaScript double-quoted string", "",
       [](const std::string& v) { return "<a href='javascript:show(\"" + v + "\")'>show</a>"; }, "entities",
       "html-entity", entities, nullptr, "Open the roadmap"},
  };
  return rows;
}

std::string page(const std::string& title, const std::string& body) {
  return "<!DOCTYPE html>\n<html><head><title>" + title + "</title></head>\n<body>\n" + body + "\n</body></html>\n";
}

/// PHP intval on a string: optional sign and leading digits, else 0.
long long intval(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  bool negative = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) negative = s[i++] == '-';
  long long v = 0;
  for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && v < 1'000'000'000'000LL; ++i) {
    v = v * 10 + (s[i] - '0');
  }
  return negative ? -v : v;
}

std::map<std::string, std::string> parse_cookies(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  if (!req.has_header("Cookie")) return out;
  const auto header = req.get_header_value("Cookie");
  std::size_t pos = 0;
  while (pos <= header.size()) {
    auto end = header.find(';', pos);
    if (end == std::string::npos) end = header.size();
    auto item = header.substr(pos, end - pos);
    const auto first = item.find_first_not_of(' ');
    item = first == std::string::npos ? "" : item.substr(first);
    const auto eq = item.find('=');
    if (eq != std::string::npos) out.emplace(item.substr(0, eq), item.substr(eq + 1));
    pos = end + 1;
  }
  return out;
}

class DbUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BadData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::string kSessionToken = "s3ss10n-7f3a9c";

}  // namespace

const std::vector<FixtureEndpoint>& matrix_endpoints() {
  static const std::vector<FixtureEndpoint> endpoints = [] {
    std::vector<FixtureEndpoint> out;
    for (const auto& r : matrix()) {
      out.push_back({"/" + r.slot + "-" + r.vulnerable_label, r.sink_description, r.vulnerable_sanitizer, false,
                     r.whitelist_row, r.slot});
      if (r.correct) {
        out.push_back(
            {"/" + r.slot + "-correct", r.sink_description, "correct-for-context", true, r.whitelist_row, r.slot});
      }
    }
    return out;
  }();
  return endpoints;
}

std::vector<std::string> seed_statements() {
  std::vector<std::string> s = {
      "DROP TABLE IF EXISTS sessions",
      "CREATE TABLE sessions (id INT, topic VARCHAR(255))",
      "INSERT INTO sessions (id, topic) VALUES (1, 'Populate current topic demo')",
      "DROP TABLE IF EXISTS snippets",
      "CREATE TABLE snippets (slot VARCHAR(64), body VARCHAR(255))",
      "DROP TABLE IF EXISTS settings",
      "CREATE TABLE settings (name VARCHAR(64), value VARCHAR(255))",
      "INSERT INTO settings (name, value) VALUES ('layout', 'grid'), "
      "('motd', 'Welcome to the quarterly planning board')",
      "DROP TABLE IF EXISTS api_keys",
      "CREATE TABLE api_keys (service VARCHAR(64), secret VARCHAR(64))",
      "INSERT INTO api_keys (service, secret) VALUES ('mailer', 'k3y9f2c81d0a7e55'), "
      "('billing', 'k3y04be77a19c2d0')",
      "DROP TABLE IF EXISTS users",
      "CREATE TABLE users (id INT, name VARCHAR(128), role VARCHAR(32))",
      "INSERT INTO users (id, name, role) VALUES (1, 'Dana Whitfield', 'editor')",
      "DROP TABLE IF EXISTS locale",
      "CREATE TABLE locale (lang CHAR(2))",
      "INSERT INTO locale (lang) VALUES ('en')",
      "DROP TABLE IF EXISTS pages",
      "CREATE TABLE pages (slug VARCHAR(64), title VARCHAR(255))",
      "INSERT INTO pages (slug, title) VALUES ('about', 'About the planning board')",
  };
  std::string insert = "INSERT INTO snippets (slot, body) VALUES ";
  bool first = true;
  for (const auto& r : matrix()) {
    if (!first) insert += ", ";
    first = false;
    insert += "('" + r.slot + "', '" + r.seed + "')";
  }
  s.push_back(insert);
  return s;
}

std::map<std::string, std::size_t> seeded_row_counts() {
  return {{"sessions", 1}, {"snippets", matrix().size()}, {"settings", 2}, {"api_keys", 2},
          {"users", 1},    {"locale", 1},                 {"pages", 1}};
}

void seed_database(const mysql::ClientOptions& db) {
  auto client = mysql::Client::connect(db);
  for (const auto& stmt : seed_statements()) client.query(stmt);
  client.close();
}

struct WebApp::Impl {
  httplib::Server server;
};

WebApp::WebApp(WebAppOptions options) : impl_(std::make_unique<Impl>()), options_(std::move(options)) {}

WebApp::~WebApp() { stop(); }

std::string WebApp::base_url() const { return "http://" + options_.listen.connect_host() + ":" + std::to_string(port_); }

void WebApp::start() {
  auto& srv = impl_->server;
  const auto db_options = options_.db;
  srv.new_task_queue = [] { return new httplib::ThreadPool(1); };

  // Fresh connection per call; any failure reaches the handler as DbUnavailable.
  auto query = [db_options](const std::string& sql) {
    try {
      auto client = mysql::Client::connect(db_options);
      auto result = client.query(sql);
      client.close();
      if (result.result_sets.empty()) return mysql::ResultSet{};
      return std::move(result.result_sets.front());
    } catch (const std::exception& e) {
      throw DbUnavailable(e.what());
    }
  };
  auto cell = [](const mysql::ResultSet& rs, std::size_t row, std::size_t col) -> std::string {
    if (row >= rs.rows.size() || col >= rs.rows[row].size() || !rs.rows[row][col]) return {};
    return *rs.rows[row][col];
  };
  auto guarded = [](std::function<std::string(const httplib::Request&, httplib::Response&)> body) {
    return [body](const httplib::Request& req, httplib::Response& res) {
      try {
        auto html = body(req, res);
        if (res.status == -1 || res.status == 0) res.status = 200;
        if (!html.empty()) res.set_content(html, "text/html; charset=utf-8");
      } catch (const DbUnavailable& e) {
        spdlog::warn("fixture: database error on {}: {}", req.path, e.what());
        res.status = 500;
        res.set_content(page("Error", "<p>database error</p>"), "text/html; charset=utf-8");
      } catch (const BadData& e) {
        res.status = 500;
        res.set_content(page("Error", "<p>invalid stored data</p>"), "text/html; charset=utf-8");
      }
    };
  };

  for (const auto& row : matrix()) {
    const std::string sql = "SELECT body FROM snippets WHERE slot = '" + row.slot + "'";
    auto serve = [=](const Sanitizer& sanitize) {
      return guarded([=](const httplib::Request&, httplib::Response&) {
        const auto rs = query(sql);
        return page("Fixture: " + row.slot, row.render(sanitize(cell(rs, 0, 0))));
      });
    };
    srv.Get("/" + row.slot + "-" + row.vulnerable_label, serve(row.vulnerable));
    if (row.correct) srv.Get("/" + row.slot + "-correct", serve(row.correct));
  }

  srv.Get(kTopicPath, guarded([=](const httplib::Request& req, httplib::Response&) {
            const auto cookies = parse_cookies(req);
            const auto it = cookies.find("SESSIONID");
            const auto id = intval(it == cookies.end() ? "" : it->second);
            const auto rs = query("SELECT `topic` FROM `sessions` WHERE id=" + std::to_string(id));
            std::string body =
                "Topic: <input id=\"topic\" name=\"topic\" />\n"
                "<script>\n"
                "function populateTopic(value) {\n"
                "  par = document.getElementById(\"topic\");\n"
                "  par.value = value;\n"
                "}\n"
                "</script>\n";
            body += "<a href=\"#\" onclick=\"populateTopic('";
            body += html_entities(cell(rs, 0, 0), QuoteMode::Quotes);
            body += "');\">Populate current topic</a>";
            return page("Topic", body);
          }));

  // Both settings share one column; a non-layout value in `layout` is fatal.
  srv.Get(kDashboardPath, guarded([=](const httplib::Request&, httplib::Response&) {
            const auto settings = query("SELECT name, value FROM settings ORDER BY name");
            std::map<std::string, std::string> kv;
            for (std::size_t i = 0; i < settings.rows.size(); ++i) kv[cell(settings, i, 0)] = cell(settings, i, 1);
            const auto keys = query("SELECT service, secret FROM api_keys");
            const auto layout = kv.find("layout");
            const auto motd = kv.find("motd");
            if (layout == kv.end() || (layout->second != "grid" && layout->second != "list") || motd == kv.end()) {
              throw BadData("settings");
            }
            return page("Dashboard", "<div class=\"layout-" + layout->second + "\">\n<p class=\"motd\">" +
                                         motd->second + "</p>\n<p>" + std::to_string(keys.rows.size()) +
                                         " integrations configured</p>\n</div>");
          }));

  srv.Get(kProfilePath, guarded([=](const httplib::Request&, httplib::Response&) {
            const auto rs = query("SELECT name, role FROM users WHERE id = 1");
            const auto role = cell(rs, 0, 1);
            if (role != "admin" && role != "editor" && role != "viewer") throw BadData("role");
            return page("Profile", "<h2>" + cell(rs, 0, 0) + "</h2>\n<p>Role: " + role + "</p>");
          }));

  srv.Get(kPagePath, guarded([=](const httplib::Request&, httplib::Response&) {
            const auto lang = cell(query("SELECT lang FROM locale"), 0, 0);
            if (lang != "en" && lang != "de") throw BadData("lang");
            const auto title = cell(query("SELECT title FROM pages WHERE slug = 'about'"), 0, 0);
            return "<!DOCTYPE html>\n<html lang=\"" + lang + "\"><head><title>About</title></head>\n<body>\n<h1>" +
                   title + "</h1>\n</body></html>\n";
          }));

  srv.Post(kLoginPath, [](const httplib::Request& req, httplib::Response& res) {
    if (req.get_param_value("user") == kLoginUser && req.get_param_value("password") == kLoginPassword) {
      res.set_header("Set-Cookie", std::string(kAuthCookie) + "=" + kSessionToken + "; Path=/; HttpOnly");
      res.set_content(page("Login", "<p>signed in</p>"), "text/html; charset=utf-8");
    } else {
      res.status = 403;
      res.set_content(page("Login", "<p>invalid credentials</p>"), "text/html; charset=utf-8");
    }
  });

  srv.Get(kAccountPath, [](const httplib::Request& req, httplib::Response& res) {
    const auto cookies = parse_cookies(req);
    const auto it = cookies.find(kAuthCookie);
    if (it == cookies.end() || it->second != kSessionToken) {
      res.status = 302;
      res.set_header("Location", kLoginPath);
      return;
    }
    const auto back = req.has_header("Referer") ? req.get_header_value("Referer") : std::string("/");
    res.set_content(page("Account", "<p>Account settings</p>\n<a href=\"" +
                                        html_entities(back, QuoteMode::Quotes) + "\">Back</a>"),
                    "text/html; charset=utf-8");
  });

  srv.Get(kReflectPath, [](const httplib::Request& req, httplib::Response& res) {
    const auto name = html_entities(escape_quotes_only(req.get_param_value("name")), QuoteMode::Quotes);
    res.set_content(page("Greeting", "<button onclick=\"greet('" + name + "')\">greet</button>"),
                    "text/html; charset=utf-8");
  });

  srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
    std::string list;
    for (const auto& e : matrix_endpoints()) list += "<li><a href=\"" + e.path + "\">" + e.path + "</a></li>\n";
    for (const char* p : {kTopicPath, kDashboardPath, kProfilePath, kPagePath, kAccountPath}) {
      list += "<li><a href=\"" + std::string(p) + "\">" + p + "</a></li>\n";
    }
    res.set_content(page("Fixture", "<ul>\n" + list + "</ul>"), "text/html; charset=utf-8");
  });

  if (options_.listen.port == 0) {
    const int port = srv.bind_to_any_port(options_.listen.listen_host());
    if (port < 0) throw std::runtime_error("cannot bind fixture web app on " + options_.listen.host);
    port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!srv.bind_to_port(options_.listen.listen_host(), options_.listen.port)) {
      throw std::runtime_error("cannot bind fixture web app on " + options_.listen.to_string());
    }
    port_ = options_.listen.port;
  }
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  srv.wait_until_ready();
}

void WebApp::stop() {
  if (thread_.joinable()) {
    impl_->server.stop();
    thread_.join();
  }
}

}  // namespace graybox::fixture
