#include <doctest.h>

#include <set>

#include <httplib.h>

#include "fixture_stack.hpp"
#include "graybox/fixture/sanitizers.hpp"
#include "graybox/fixture/sql_engine.hpp"
#include "graybox/mysql/client.hpp"

using namespace graybox;
using namespace graybox::fixture;

namespace {

httplib::Result get(const std::string& base, const std::string& path, httplib::Headers headers = {}) {
  httplib::Client c(base);
  c.set_connection_timeout(5);
  c.set_read_timeout(10);
  return c.Get(path, headers);
}

void replace_table(testing::FixtureStack& stack, const std::string& create, const std::string& insert) {
  auto c = mysql::Client::connect(testing::client_options(stack.db_server().port()));
  const auto name = create.substr(13, create.find(' ', 13) - 13);
  c.query("DROP TABLE IF EXISTS " + name);
  c.query(create);
  c.query(insert);
}

}  // namespace

TEST_CASE("sanitizers match their PHP counterparts") {
  CHECK(html_entities("<a href='x'>\"&", QuoteMode::Quotes) == "&lt;a href=&#039;x&#039;&gt;&quot;&amp;");
  CHECK(html_entities("<a href='x'>\"", QuoteMode::Compat) == "&lt;a href='x'&gt;&quot;");
  CHECK(html_entities("'\"", QuoteMode::NoQuotes) == "'\"");
  CHECK(addslashes("a'b\"c\\d") == "a\\'b\\\"c\\\\d");
  CHECK(addslashes(std::string_view("\0", 1)) == "\\0");
  CHECK(escape_quotes_only("a'b\\c") == "a\\'b\\c");
  CHECK(rawurlencode("a b~-._/:") == "a%20b~-._%2F%3A");
  CHECK(js_hex_escape("a, b.<'") == "a, b.\\x3c\\x27");
  CHECK(css_hex_escape("a'b") == "a\\27 b");
  CHECK(strip_angles("<b>x</b>") == "bx/b");
}

TEST_CASE("SQL engine basics") {
  Database db;
  db.execute("CREATE TABLE t (id INT, name VARCHAR(10))");
  db.execute("INSERT INTO t (id, name) VALUES (1, 'a;b'), (2, NULL), (3, 'it''s')");
  CHECK(db.row_count("t") == 3);
  const auto r = db.execute("SELECT name FROM t WHERE id = 3");
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0][0] == std::optional<Bytes>("it's"));
  CHECK(db.execute("SELECT * FROM t ORDER BY id DESC LIMIT 1").rows[0][0] == std::optional<Bytes>("3"));
  CHECK_THROWS_AS(db.execute("SELECT x FROM missing"), SqlError);
  CHECK(split_statements("SELECT 'a;b'; SELECT 2;").size() == 2);
}

TEST_CASE("seeding is idempotent and produces the documented row counts") {
  testing::FixtureStack stack;
  seed_database(testing::client_options(stack.db_server().port()));
  seed_database(testing::client_options(stack.db_server().port()));
  for (const auto& [table, rows] : seeded_row_counts()) {
    CAPTURE(table);
    CHECK(stack.database().row_count(table) == rows);
  }
  std::set<std::string> slots;
  for (const auto& e : matrix_endpoints()) slots.insert(e.slot);
  CHECK(stack.database().row_count("snippets") == slots.size());
}

TEST_CASE("fixture pages render database values") {
  testing::FixtureStack stack;

  SUBCASE("topic page") {
    replace_table(stack, "CREATE TABLE sessions (id INT, topic VARCHAR(255))",
                  "INSERT INTO sessions (id, topic) VALUES (1, 'hello')");
    const auto r = get(stack.base_url(), kTopicPath, {{"Cookie", "SESSIONID=1"}});
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->body.find("populateTopic('hello');") != std::string::npos);
  }

  SUBCASE("text sink with and without sanitization") {
    replace_table(stack, "CREATE TABLE snippets (slot VARCHAR(64), body VARCHAR(255))",
                  "INSERT INTO snippets (slot, body) VALUES ('htmltext', '<b>x')");
    std::string vulnerable, correct;
    for (const auto& e : matrix_endpoints()) {
      if (e.slot != "htmltext") continue;
      (e.correct ? correct : vulnerable) = e.path;
    }
    REQUIRE_FALSE(vulnerable.empty());
    REQUIRE_FALSE(correct.empty());
    const auto v = get(stack.base_url(), vulnerable);
    const auto c = get(stack.base_url(), correct);
    REQUIRE(v);
    REQUIRE(c);
    CHECK(v->body.find("<b>x") != std::string::npos);
    CHECK(c->body.find("&lt;b&gt;x") != std::string::npos);
    CHECK(c->body.find("<b>x") == std::string::npos);
  }

  SUBCASE("every matrix endpoint answers") {
    for (const auto& e : matrix_endpoints()) {
      CAPTURE(e.path);
      const auto r = get(stack.base_url(), e.path);
      REQUIRE(r);
      CHECK(r->status == 200);
    }
  }

  SUBCASE("whitelisted settings reject unexpected values") {
    replace_table(stack, "CREATE TABLE settings (name VARCHAR(64), value VARCHAR(255))",
                  "INSERT INTO settings (name, value) VALUES ('layout', 'masonry'), ('motd', 'hi')");
    const auto r = get(stack.base_url(), kDashboardPath);
    REQUIRE(r);
    CHECK(r->status == 500);
  }

  SUBCASE("account requires the login cookie") {
    const auto anon = get(stack.base_url(), kAccountPath);
    REQUIRE(anon);
    CHECK(anon->status == 302);
    httplib::Client c(stack.base_url());
    const auto login = c.Post(kLoginPath, std::string("user=") + kLoginUser + "&password=" + kLoginPassword,
                              "application/x-www-form-urlencoded");
    REQUIRE(login);
    const auto set_cookie = login->get_header_value("Set-Cookie");
    CHECK(set_cookie.rfind(std::string(kAuthCookie) + "=", 0) == 0);
    const auto cookie = set_cookie.substr(0, set_cookie.find(';'));
    const auto in = get(stack.base_url(), kAccountPath, {{"Cookie", cookie}, {"Referer", "http://x/'q"}});
    REQUIRE(in);
    CHECK(in->status == 200);
    CHECK(in->body.find("http://x/&#039;q") != std::string::npos);
  }
}

TEST_CASE("database outage yields HTTP 500") {
  testing::FixtureStack stack;
  stack.db_server().stop();
  const auto r = get(stack.base_url(), kTopicPath, {{"Cookie", "SESSIONID=1"}});
  REQUIRE(r);
  CHECK(r->status == 500);
}
