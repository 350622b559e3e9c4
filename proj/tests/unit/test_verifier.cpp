#include <doctest.h>

#include <functional>

#include "graybox/context/context.hpp"
#include "graybox/fixture/sanitizers.hpp"
#include "graybox/payload/payload.hpp"
#include "graybox/verify/verifier.hpp"

using namespace graybox;
using namespace graybox::verify;
using fixture::QuoteMode;

namespace {

const std::string P = "zqxaaaaab";

struct Case {
  std::string name;
  std::string before;
  std::string after;
  std::function<std::string(std::string_view)> sanitize;
  Outcome expected;
  std::optional<std::size_t> failing_node;
};

std::string raw(std::string_view s) { return std::string(s); }
std::string ent(std::string_view s) { return fixture::html_entities(s, QuoteMode::Quotes); }

Verdict run(const Case& c, const std::string& payload) {
  const auto ctxs = context::compute_contexts(c.before + P + c.after, {P});
  REQUIRE(ctxs.size() == 1);
  return verify::verify(c.sanitize(payload), ctxs[0]);
}

}  // namespace

TEST_CASE("sanitizer and context matrix on the canonical payload") {
  using fixture::addslashes;
  using fixture::css_hex_escape;
  using fixture::escape_quotes_only;
  using fixture::html_entities;
  using fixture::js_hex_escape;
  using fixture::rawurlencode;
  const std::vector<Case> cases = {
      {"text raw", "<p>", "</p>", raw, Outcome::FlawArbitraryJs, 0},
      {"text entities", "<p>", "</p>", ent, Outcome::CorrectSanitization, {}},
      {"double attr noquotes", "<a title=\"", "\">", [](auto s) { return html_entities(s, QuoteMode::NoQuotes); },
       Outcome::FlawArbitraryJs, 0},
      {"double attr compat", "<a title=\"", "\">", [](auto s) { return html_entities(s, QuoteMode::Compat); },
       Outcome::CorrectSanitization, {}},
      {"single attr compat", "<a title='", "'>", [](auto s) { return html_entities(s, QuoteMode::Compat); },
       Outcome::FlawArbitraryJs, 0},
      {"single attr quotes", "<a title='", "'>", ent, Outcome::CorrectSanitization, {}},
      {"script addslashes", "<script>var x = '", "';</script>", addslashes, Outcome::FlawArbitraryJs, 0},
      {"script js hex", "<script>var x = '", "';</script>", js_hex_escape, Outcome::CorrectSanitization, {}},
      {"uri start entities", "<a href=\"", "\">", ent, Outcome::FlawArbitraryJs, 1},
      {"uri start urlencoded", "<a href=\"", "\">", [](auto s) { return ent(rawurlencode(s)); },
       Outcome::CorrectSanitization, {}},
      {"uri query entities", "<a href=\"/s?q=", "\">", ent, Outcome::FlawNoJsExecution, 1},
      {"uri query urlencoded", "<a href=\"/s?q=", "\">", [](auto s) { return ent(rawurlencode(s)); },
       Outcome::CorrectSanitization, {}},
      {"handler entities", "<a onclick=\"f('", "')\">", ent, Outcome::FlawArbitraryJs, 1},
      {"handler js hex", "<a onclick=\"f('", "')\">", [](auto s) { return ent(js_hex_escape(s)); },
       Outcome::CorrectSanitization, {}},
      {"handler quotes only", "<a onclick=\"f('", "')\">", [](auto s) { return ent(escape_quotes_only(s)); },
       Outcome::FlawPossiblyArbitraryJs, 1},
      {"handler addslashes", "<a onclick=\"f('", "')\">", [](auto s) { return ent(addslashes(s)); },
       Outcome::CorrectSanitization, {}},
      {"css string entities", "<div style=\"content: '", "'\">", ent, Outcome::FlawArbitraryJs, 1},
      {"css string hex", "<div style=\"content: '", "'\">", [](auto s) { return ent(css_hex_escape(s)); },
       Outcome::CorrectSanitization, {}},
      {"unquoted attr", "<a title=", ">", ent, Outcome::FlawManualAnalysis, 0},
      {"css value", "<div style=\"color: ", "\">", ent, Outcome::FlawManualAnalysis, 1},
  };
  const auto payload = payload::canonical_payload().text;
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const auto v = run(c, payload);
    CHECK(to_string(v.outcome) == to_string(c.expected));
    CHECK(v.failing_node == c.failing_node);
    CHECK(v.trace.size() == (c.failing_node ? *c.failing_node + 1 : v.trace.size()));
  }
}

TEST_CASE("correct sanitizations hold for every generated payload") {
  const std::vector<Case> cases = {
      {"text", "<p>", "</p>", ent, Outcome::CorrectSanitization, {}},
      {"script", "<script>var x = '", "';</script>", fixture::js_hex_escape, Outcome::CorrectSanitization, {}},
      {"handler", "<a onclick=\"f('", "')\">", [](auto s) { return ent(fixture::js_hex_escape(s)); },
       Outcome::CorrectSanitization, {}},
      {"uri", "<a href=\"", "\">", [](auto s) { return ent(fixture::rawurlencode(s)); },
       Outcome::CorrectSanitization, {}},
  };
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto payload = payload::generate_payload(seed).text;
    for (const auto& c : cases) {
      CAPTURE(c.name);
      CHECK(run(c, payload).outcome == Outcome::CorrectSanitization);
    }
  }
}

TEST_CASE("escape conditions") {
  CHECK(escape_condition(NodeKind::HtmlText, "a<b", std::nullopt));
  CHECK_FALSE(escape_condition(NodeKind::HtmlText, "a&lt;b", std::nullopt));
  CHECK(escape_condition(NodeKind::HtmlData, "</x", std::nullopt));
  CHECK_FALSE(escape_condition(NodeKind::HtmlData, "<\\/x", std::nullopt));
  CHECK_FALSE(escape_condition(NodeKind::HtmlData, "a/b", std::nullopt));
  CHECK(escape_condition(NodeKind::Uri, "javascript:x", UriPosition::Beginning));
  CHECK_FALSE(escape_condition(NodeKind::Uri, "a&b", UriPosition::Beginning));
  CHECK(escape_condition(NodeKind::Uri, "a&b", UriPosition::Elsewhere));
  CHECK(escape_condition(NodeKind::JsStringSingle, "a'b", std::nullopt));
  CHECK_FALSE(escape_condition(NodeKind::JsStringSingle, "a\\'b\"", std::nullopt));
  CHECK(escape_condition(NodeKind::JsStringDouble, "a\\qb", std::nullopt));
  CHECK_FALSE(escape_condition(NodeKind::JsStringDouble, "a\\nb", std::nullopt));
  CHECK(escape_condition(NodeKind::CssStringDouble, "a\"b", std::nullopt));
  CHECK_FALSE(escape_condition(NodeKind::CssStringDouble, "a\\22 b", std::nullopt));
  for (auto k : context::kAllKinds) {
    if (!has_escape_condition(k)) CHECK_THROWS_AS(escape_condition(k, "x", std::nullopt), std::logic_error);
  }
}

TEST_CASE("severity") {
  CHECK(classify_severity(NodeKind::Uri, UriPosition::Elsewhere, "&") == Outcome::FlawNoJsExecution);
  CHECK(classify_severity(NodeKind::Uri, UriPosition::Beginning, ":") == Outcome::FlawArbitraryJs);
  CHECK(classify_severity(NodeKind::JsStringSingle, std::nullopt, "a\\qb") == Outcome::FlawPossiblyArbitraryJs);
  CHECK(classify_severity(NodeKind::JsStringSingle, std::nullopt, "a\\q'b") == Outcome::FlawArbitraryJs);
  CHECK(classify_severity(NodeKind::HtmlText, std::nullopt, "<") == Outcome::FlawArbitraryJs);
  for (auto o : kFlawOutcomes) CHECK_FALSE(severity_phrase(o).empty());
}

TEST_CASE("verification trace of the running example") {
  const std::string page =
      "<a href=\"#\" onclick=\"populateTopic('" + P + "');\">Populate current topic</a>";
  const auto ctxs = context::compute_contexts(page, {P});
  REQUIRE(ctxs.size() == 1);
  const auto encoded = fixture::html_entities(payload::canonical_payload().text, QuoteMode::Quotes);
  const auto v = verify::verify(encoded, ctxs[0]);
  CHECK(v.outcome == Outcome::FlawArbitraryJs);
  REQUIRE(v.trace.size() == 2);
  CHECK_FALSE(v.trace[0].escaped);
  CHECK(v.trace[0].node_text_decoded == "populateTopic('abcdef<gh\"ij'kl&mn:op\\qr/stuv');");
  CHECK(v.trace[1].escaped);
  CHECK(v.evidence == payload::canonical_payload().text);
}
