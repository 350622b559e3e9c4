#include <doctest.h>

#include <random>

#include "fixture_stack.hpp"
#include "graybox/scan/grouping.hpp"
#include "graybox/scan/report.hpp"
#include "graybox/scan/request.hpp"

using namespace graybox;
using namespace graybox::scan;

namespace {

/// Forwards to the real transport and keeps every request it was asked to send.
class RecordingTransport : public HttpTransport {
 public:
  explicit RecordingTransport(HttpTransport& inner) : inner_(inner) {}
  HttpResponse send(const RequestTemplate& request, const std::map<std::string, std::string>& cookies) override {
    sent.push_back(request);
    return inner_.send(request, cookies);
  }
  std::vector<RequestTemplate> sent;

 private:
  HttpTransport& inner_;
};

mysql::FetchEvent ev(std::optional<std::string> table, std::string column, Bytes value) {
  return {std::move(table), std::move(column), std::move(value), 0};
}

std::string random_query(std::mt19937_64& rng) {
  const char* alphabet = "ab=&%2F+;x~.";
  std::string q;
  for (std::size_t i = 0, n = rng() % 25; i < n; ++i) q += alphabet[rng() % 12];
  return q;
}

}  // namespace

TEST_CASE("untouched templates re-serialize byte for byte") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 500; ++trial) {
    const auto q = random_query(rng);
    const auto c = random_query(rng);
    const auto b = random_query(rng);
    const std::string target = "/p" + (q.empty() ? std::string() : "?" + q);
    const auto t = make_template("r", "POST", "http://h.example" + target,
                                 {{"Cookie", c}, {"Content-Type", "application/x-www-form-urlencoded"}}, b);
    CHECK(t.target() == target);
    CHECK(t.origin == "http://h.example");
    CHECK(t.serialized_body() == b);
    if (!c.empty()) CHECK(t.cookie_header() == std::optional<std::string>(c));
  }
}

TEST_CASE("mutation changes one field at a time") {
  const auto p = payload::canonical_payload();
  const auto t = make_template("r", "POST", "http://h/x?a=1&b=two",
                               {{"Cookie", "s=abc; t=d"},
                                {"Referer", "http://h/prev"},
                                {"X-Other", "o"},
                                {"Content-Type", "application/x-www-form-urlencoded"}},
                               "f=v&g=w");
  const auto points = http_points(t, {"referer"});
  std::vector<std::string> locators;
  for (const auto& pt : points) locators.push_back(std::string(to_string(pt.kind)) + ":" + pt.locator);
  CHECK(locators.size() == 7);

  for (const auto& pt : points) {
    CAPTURE(pt.locator);
    const auto m = mutate_http(t, pt, p);
    int changed = 0;
    changed += m.target() != t.target();
    changed += m.cookie_header() != t.cookie_header();
    changed += m.serialized_body() != t.serialized_body();
    changed += m.header("Referer") != t.header("Referer");
    CHECK(changed == 1);
    CHECK(m.header("X-Other") == t.header("X-Other"));
    switch (pt.kind) {
      case PointKind::QueryParam:
        for (const auto& q : m.query) {
          if (q.name == pt.locator) CHECK(form_decode(q.raw_value) == p.text);
        }
        break;
      case PointKind::BodyParam:
        for (const auto& f : m.form) {
          if (f.name == pt.locator) CHECK(form_decode(f.raw_value) == p.text);
        }
        break;
      case PointKind::Cookie:
        for (const auto& c : m.cookies) {
          if (c.name == pt.locator) CHECK(c.raw_value == p.text);
        }
        break;
      case PointKind::Header:
        CHECK(m.header("Referer") == std::optional<std::string>(p.text));
        break;
      case PointKind::DbFetchGroup:
        FAIL("database point from http_points");
    }
  }
  CHECK_THROWS_AS(mutate_http(t, {PointKind::QueryParam, "zz"}, p), LocatorNotFound);
}

TEST_CASE("corpus parsing") {
  const auto corpus = parse_corpus_jsonl(
      "# comment\n"
      "\n"
      "{\"id\":\"a\",\"method\":\"GET\",\"url\":\"http://h/a?x=1\",\"headers\":{\"Cookie\":\"k=v\"}}\n"
      "{\"method\":\"POST\",\"url\":\"/b\",\"headers\":[[\"Content-Type\",\"text/plain\"]],\"body_b64\":\"AAE=\"}\n");
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].id == "a");
  CHECK(corpus[0].cookie_header() == std::optional<std::string>("k=v"));
  CHECK(corpus[1].body == Bytes("\x00\x01", 2));
  CHECK_FALSE(corpus[1].id.empty());
  CHECK_THROWS_AS(parse_corpus_jsonl("{not json}\n"), CorpusError);
  CHECK_THROWS_AS(parse_corpus_jsonl("{\"method\":\"GET\"}\n"), CorpusError);
}

TEST_CASE("HAR import") {
  const auto corpus = parse_har(R"({"log":{"entries":[{"request":{"method":"GET","url":"http://h/q?a=b",
      "headers":[{"name":"Referer","value":"http://h/"}]}}]}})");
  REQUIRE(corpus.size() == 1);
  CHECK(corpus[0].target() == "/q?a=b");
  CHECK(corpus[0].header("referer") == std::optional<std::string>("http://h/"));
}

TEST_CASE("grouping at each granularity") {
  const std::vector<mysql::FetchEvent> events = {
      ev("s", "topic", "x"), ev("s", "topic", "y"), ev("s", "topic", "x"),
      ev("s", "owner", "x"), ev("u", "name", "n"),  ev(std::nullopt, "expr", "e"),
  };
  CHECK(group_fetches(events, Granularity::All).size() == 1);
  CHECK(group_fetches(events, Granularity::Table).size() == 3);
  CHECK(group_fetches(events, Granularity::TableColumn).size() == 4);
  const auto individual = group_fetches(events, Granularity::IndividualFetch);
  CHECK(individual.size() == 5);

  const auto tc = group_fetches(events, Granularity::TableColumn);
  CHECK(tc[0].key.locator() == "table=s,column=topic");
  CHECK(tc[0].values == std::vector<Bytes>{"x", "y"});
  CHECK(group_fetches(events, Granularity::All)[0].key.locator() == "all");
  CHECK(group_fetches({}, Granularity::All).empty());

  // Each group's spec selects exactly that group's events. A Table group of
  // derived columns has no table to select on and matches every table.
  for (const auto g : {Granularity::IndividualFetch, Granularity::TableColumn, Granularity::Table, Granularity::All}) {
    for (const auto& group : group_fetches(events, g)) {
      if (g == Granularity::Table && group.key.table && !*group.key.table) {
        continue;
      }
      CAPTURE(group.key.locator());
      const auto spec = spec_for_group(group.key, "P");
      std::size_t hits = 0;
      for (const auto& e : events) {
        if (spec.matches(e.table, e.column, e.value)) {
          ++hits;
          CHECK(std::find(group.values.begin(), group.values.end(), e.value) != group.values.end());
        }
      }
      CHECK(hits >= group.values.size());
    }
  }
  CHECK(parse_granularity("table-column") == Granularity::TableColumn);
  CHECK_FALSE(parse_granularity("row").has_value());
}

TEST_CASE("config parsing") {
  auto c = scan_config_from_json(nlohmann::json::parse(R"({"application":"x","granularity":"table","seed":7,
      "control":"127.0.0.1:9","skip_url_patterns":["logout"]})"));
  CHECK(c.application == "x");
  CHECK(c.granularity == Granularity::Table);
  CHECK(c.seed == 7);
  CHECK(c.control.port == 9);
  CHECK_THROWS_AS(scan_config_from_json(nlohmann::json::parse(R"({"aplication":"typo"})")), std::invalid_argument);
  CHECK_THROWS_AS(scan_config_from_json(nlohmann::json::parse(R"({"granularity":"row"})")), std::invalid_argument);
  CHECK_THROWS_AS(scan_config_from_json(nlohmann::json::parse(R"({"login":{"extra":1}})")), std::invalid_argument);
  CHECK_THROWS_AS(scan_config_from_json(nlohmann::json::parse(R"({"skip_url_patterns":["("]})")),
                  std::invalid_argument);
}

TEST_CASE("scans against the fixture") {
  testing::FixtureStack stack;

  SUBCASE("reports are deterministic") {
    const auto a = stack.scan("full.jsonl", Granularity::TableColumn);
    const auto b = stack.scan("full.jsonl", Granularity::TableColumn);
    CHECK_FALSE(a.aborted);
    CHECK(render_jsonl(a) == render_jsonl(b));
    CHECK_FALSE(a.findings.empty());
  }

  SUBCASE("tallies partition the analyzed echoes") {
    const auto r = stack.scan("full.jsonl", Granularity::IndividualFetch);
    CHECK(r.tallies.incorrect_total() == r.findings.size());
    std::map<verify::Outcome, std::uint64_t> by_outcome;
    for (const auto& f : r.findings) ++by_outcome[f.outcome];
    for (const auto& [o, n] : r.tallies.incorrect) CHECK(by_outcome[o] == n);
    CHECK(r.counters.http_requests ==
          r.counters.baseline_replays + r.counters.mutated_replays + r.counters.login_requests +
              r.counters.reauthentications);
  }

  SUBCASE("empty corpus sends only the login") {
    const auto c = stack.config(Granularity::TableColumn);
    mysql::ControlClient control(c.control, c.control_token);
    HttplibTransport http(c.target, c.timeout_ms);
    const auto r = run_scan({}, c, control, http);
    CHECK(r.findings.empty());
    CHECK(r.counters.http_requests == r.counters.login_requests);
    CHECK(r.counters.login_requests == c.login.requests.size());
  }

  SUBCASE("baseline replays send the recorded request unchanged") {
    const auto c = stack.config(Granularity::TableColumn);
    const auto corpus = load_corpus(testing::data_dir() / "corpus" / "full.jsonl");
    mysql::ControlClient control(c.control, c.control_token);
    HttplibTransport http(c.target, c.timeout_ms);
    RecordingTransport rec(http);
    run_scan(corpus, c, control, rec);
    for (const auto& t : corpus) {
      CAPTURE(t.id);
      const auto first = std::find_if(rec.sent.begin(), rec.sent.end(),
                                      [&](const RequestTemplate& s) { return s.id == t.id; });
      REQUIRE(first != rec.sent.end());
      CHECK(first->target() == t.target());
      CHECK(first->serialized_body() == t.serialized_body());
      CHECK(first->cookie_header() == t.cookie_header());
      CHECK(first->headers == t.headers);
    }
  }

  SUBCASE("injected database values leave the database untouched") {
    stack.scan("running_example.jsonl", Granularity::IndividualFetch);
    auto client = mysql::Client::connect(testing::client_options(stack.db_server().port()));
    const auto r = client.query("SELECT topic FROM sessions WHERE id=1");
    CHECK(r.result_sets[0].rows[0][0] == std::optional<Bytes>("Populate current topic demo"));
  }

  SUBCASE("unreachable control endpoint aborts with a partial report") {
    auto c = stack.config(Granularity::TableColumn);
    c.control = {"127.0.0.1", 1};
    c.timeout_ms = 2000;
    const auto r = stack.scan("running_example.jsonl", c);
    CHECK(r.aborted);
    CHECK_FALSE(r.abort_reason.empty());
  }
}
