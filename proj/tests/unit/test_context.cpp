#include <doctest.h>

#include <algorithm>
#include <random>

#include "graybox/context/context.hpp"

using namespace graybox;
using namespace graybox::context;

namespace {

const std::string P = "zqxaaaaab";

std::string signature_of(const std::string& html) {
  const auto ctxs = compute_contexts(html, {P});
  if (ctxs.size() != 1) return "<" + std::to_string(ctxs.size()) + " contexts>";
  return ctxs[0].signature();
}

std::optional<UriPosition> uri_position(const std::string& html) {
  const auto ctxs = compute_contexts(html, {P});
  if (ctxs.size() != 1) return std::nullopt;
  for (const auto& n : ctxs[0].chain) {
    if (n.kind == NodeKind::Uri) return n.position;
  }
  return std::nullopt;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

TEST_CASE("contexts of single echoes") {
  const std::pair<std::string, std::string> cases[] = {
      {"<p>" + P + "</p>", "HtmlText"},
      {"<a title=\"" + P + "\">x</a>", "HtmlAttrDoubleQuoted"},
      {"<a title='" + P + "'>x</a>", "HtmlAttrSingleQuoted"},
      {"<a title=" + P + ">x</a>", "HtmlAttrUnquoted"},
      {"<script>var x = \"" + P + "\";</script>", "HtmlData > JsStringDouble"},
      {"<script>var x = '" + P + "';</script>", "HtmlData > JsStringSingle"},
      {"<script>var x = " + P + ";</script>", "HtmlData > JsOther"},
      {"<a href=\"" + P + "\">x</a>", "HtmlAttrDoubleQuoted > Uri(beginning)"},
      {"<a href=\"/s?q=" + P + "\">x</a>", "HtmlAttrDoubleQuoted > Uri(elsewhere)"},
      {"<a onclick=\"f('" + P + "')\">x</a>", "HtmlAttrDoubleQuoted > JsStringSingle"},
      {"<a onclick='f(\"" + P + "\")'>x</a>", "HtmlAttrSingleQuoted > JsStringDouble"},
      {"<div style=\"content: '" + P + "'\">x</div>", "HtmlAttrDoubleQuoted > CssStringSingle"},
      {"<div style='content: \"" + P + "\"'>x</div>", "HtmlAttrSingleQuoted > CssStringDouble"},
      {"<div style=\"color: " + P + "\">x</div>", "HtmlAttrDoubleQuoted > CssPropertyValue"},
      {"<style>a { content: \"" + P + "\"; }</style>", "HtmlData > CssStringDouble"},
  };
  for (const auto& [html, sig] : cases) {
    CAPTURE(html);
    CHECK(signature_of(html) == sig);
  }
}

TEST_CASE("URI position distinguishes the first characters") {
  CHECK(uri_position("<a href=\"" + P + "\">x</a>") == UriPosition::Beginning);
  CHECK(uri_position("<a href=\"/s?q=" + P + "\">x</a>") == UriPosition::Elsewhere);
  CHECK(uri_position("<img src='http://h/" + P + "'>") == UriPosition::Elsewhere);
}

TEST_CASE("multiple echoes yield one context each, in order") {
  const std::string Q = "zqxaaaaac";
  const std::string html = "<p>" + P + "</p><a title=\"" + Q + "\">" + P + "</a>";
  const auto ctxs = compute_contexts(html, {P, Q});
  REQUIRE(ctxs.size() == 3);
  CHECK(ctxs[0].placeholder == P);
  CHECK(ctxs[1].placeholder == Q);
  CHECK(ctxs[2].placeholder == P);
  CHECK(ctxs[0].offset < ctxs[1].offset);
  CHECK(ctxs[1].offset < ctxs[2].offset);
  CHECK(html.compare(ctxs[1].offset, Q.size(), Q) == 0);
}

TEST_CASE("entity-encoded attribute content is decoded before descending") {
  const auto sig = signature_of("<a onclick=\"f(&#39;" + P + "&#39;)\">x</a>");
  CHECK(sig == "HtmlAttrDoubleQuoted > JsStringSingle");
}

TEST_CASE("legal transitions") {
  CHECK(is_legal_chain({NodeKind::HtmlAttrDoubleQuoted, NodeKind::JsStringSingle}));
  CHECK(is_legal_chain({NodeKind::HtmlText}));
  CHECK_FALSE(is_legal_chain({NodeKind::JsStringSingle, NodeKind::HtmlText}));
  CHECK_FALSE(is_legal_chain({}));
  for (auto k : kAllKinds) CHECK_FALSE(to_string(k).empty());
}

TEST_CASE("random documents produce legal chains for every echo") {
  std::mt19937_64 rng(8);
  const std::string parts[] = {
      "<p>", "</p>", "<a href=\"", "\">", "<a onclick='f(\"", "\")'>", "<script>var s='", "';</script>",
      "<style>b{content:\"", "\"}</style>", "<div style=\"color:", "<!-- ", " -->", "text ", "<b title=",
      " >", "&amp;", "\"", "'", "<", ">", "=", "javascript:", "url(", ")", "\\", "\n", "<textarea>",
      "</textarea>", "<title>", "</title>",
  };
  for (int trial = 0; trial < 1000; ++trial) {
    std::string html;
    std::size_t expected = 0;
    for (std::size_t i = 0, n = rng() % 20; i < n; ++i) {
      if (rng() % 4 == 0) {
        html += P;
        ++expected;
      } else {
        html += parts[rng() % std::size(parts)];
      }
    }
    CAPTURE(html);
    const auto ctxs = compute_contexts(html, {P});
    CHECK(ctxs.size() == expected);
    for (const auto& c : ctxs) {
      CHECK(is_legal_chain(c.kinds()));
      CHECK(c.chain.size() <= kMaxDepth);
      CHECK(c.placeholder == P);
      CHECK(html.compare(c.offset, P.size(), P) == 0);
    }
  }
}

TEST_CASE("script content agrees with an independent extractor") {
  std::mt19937_64 rng(12);
  const std::string js_parts[] = {"var a = 1;", " '<b>' ", "\"</p>\"", "if (a < b) {", "}", "// c\n", "x = y > z;"};
  const std::string openers[] = {"<script>", "<script type=\"text/javascript\">", "<SCRIPT>"};
  const std::string closers[] = {"</script>", "</SCRIPT>", "</script >"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string js;
    for (std::size_t i = 0, n = 1 + rng() % 6; i < n; ++i) js += js_parts[rng() % std::size(js_parts)];
    const std::string html =
        "<p>pre</p>" + openers[rng() % 3] + js + closers[rng() % 3] + "<p>post</p>";
    // Oracle: content runs from the end of the opening tag to the first
    // case-insensitive "</script".
    const auto l = lower(html);
    const auto open = l.find("<script");
    const auto begin = l.find('>', open) + 1;
    const auto end = l.find("</script", begin);
    CAPTURE(html);
    const auto segs = parse_html(html);
    const auto it = std::find_if(segs.begin(), segs.end(),
                                 [](const HtmlSegment& s) { return s.embeds == Language::JavaScript; });
    REQUIRE(it != segs.end());
    CHECK(it->kind == NodeKind::HtmlData);
    CHECK(it->begin == begin);
    CHECK(it->end == end);
  }
}

TEST_CASE("HTML segments are disjoint and ordered") {
  std::mt19937_64 rng(21);
  const std::string parts[] = {"<p>", "</p>", "<a href=\"x\">", "<b class=c id='d'>", "t", "<", ">", "\"", "'",
                               "<script>1</script>", "<!--c-->", "&lt;", "<br/>"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string html;
    for (std::size_t i = 0, n = rng() % 25; i < n; ++i) html += parts[rng() % std::size(parts)];
    const auto segs = parse_html(html);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      CHECK(segs[i].begin <= segs[i].end);
      CHECK(segs[i].end <= html.size());
      if (i) CHECK(segs[i - 1].end <= segs[i].begin);
    }
  }
}

TEST_CASE("node decoding") {
  CHECK(decode_node(NodeKind::HtmlAttrDoubleQuoted, "a&amp;b") == "a&b");
  CHECK(decode_node(NodeKind::Uri, "a%3Cb") == "a<b");
  CHECK(decode_node(NodeKind::CssStringDouble, "\\3c") == "<");
  CHECK(decode_node(NodeKind::JsStringSingle, "a&amp;b") == "a&amp;b");
  CHECK(decode_node(NodeKind::HtmlText, "a&amp;b") == "a&amp;b");
}
