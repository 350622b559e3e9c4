#include <doctest.h>

#include <cstdio>
#include <random>

#include "graybox/context/decoders.hpp"

using namespace graybox;
using namespace graybox::context;

namespace {

std::string hex(unsigned v, int width, bool upper) {
  char buf[16];
  std::snprintf(buf, sizeof buf, upper ? "%0*X" : "%0*x", width, v);
  return buf;
}

Bytes random_ascii(std::mt19937_64& rng, std::size_t n) {
  Bytes out;
  for (std::size_t i = 0; i < n; ++i) out += static_cast<char>(1 + rng() % 127);
  return out;
}

}  // namespace

TEST_CASE("entity decoding of known forms") {
  CHECK(html_entity_decode("&lt;&gt;&amp;&quot;&#039;&#x27;&apos;") == "<>&\"''\'");
  CHECK(html_entity_decode("&#60;&#X3C;&#x3c") == "<<<");
  CHECK(html_entity_decode("&amp;lt;") == "&lt;");
  CHECK(html_entity_decode("&amp x &lt") == "& x <");
  CHECK(html_entity_decode("&ampx") == "&ampx");
  CHECK(html_entity_decode("&nbsp;") == "\xc2\xa0");
  CHECK(html_entity_decode("&bogus; & &#; &#xZZ;") == "&bogus; & &#; &#xZZ;");
}

TEST_CASE("entity decoding inverts a reference encoder") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto plain = random_ascii(rng, rng() % 60);
    Bytes enc;
    for (unsigned char c : plain) {
      switch (rng() % 4) {
        case 0:
          enc += "&#" + std::to_string(c) + ";";
          break;
        case 1:
          enc += "&#x" + hex(c, 1 + rng() % 3, rng() % 2) + ";";
          break;
        case 2:
          if (c == '<') {
            enc += "&lt;";
          } else if (c == '&') {
            enc += "&amp;";
          } else if (c == '"') {
            enc += "&quot;";
          } else {
            enc += "&#" + std::to_string(c) + ";";
          }
          break;
        default:
          if (c == '&') {
            enc += "&amp;";
          } else {
            enc += static_cast<char>(c);
          }
      }
    }
    CHECK(html_entity_decode(enc) == plain);
  }
}

TEST_CASE("url decoding inverts a reference percent encoder") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    Bytes plain;
    for (std::size_t i = 0, n = rng() % 60; i < n; ++i) plain += static_cast<char>(rng() & 0xFF);
    Bytes enc;
    for (unsigned char c : plain) {
      const bool safe = std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~';
      if (safe && rng() % 2) {
        enc += static_cast<char>(c);
      } else {
        enc += "%" + hex(c, 2, rng() % 2);
      }
    }
    CHECK(url_decode(enc) == plain);
  }
  CHECK(url_decode("a+b%2") == "a+b%2");
  CHECK(url_decode("%zz%4") == "%zz%4");
}

TEST_CASE("css decoding inverts a reference hex escaper") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto plain = random_ascii(rng, rng() % 60);
    Bytes enc;
    for (unsigned char c : plain) {
      const bool hexdigit = std::isxdigit(c);
      switch (rng() % 3) {
        case 0:
          enc += "\\" + hex(c, 6, rng() % 2);
          break;
        case 1:
          enc += "\\" + hex(c, 2, false) + " ";
          break;
        default:
          if (hexdigit || c == '\n' || c == '\r' || c == '\f') {
            enc += "\\" + hex(c, 6, false);
          } else {
            enc += "\\";
            enc += static_cast<char>(c);
          }
      }
    }
    CHECK(css_decode(enc) == plain);
  }
  CHECK(css_decode("a\\\nb") == "ab");
  CHECK(css_decode("\\3c\tx") == "<x");
  CHECK(css_decode("\\0") == "\xef\xbf\xbd");
}

TEST_CASE("decoders never lengthen input outside the CSS NUL escape") {
  std::mt19937_64 rng(4);
  const char* alphabet = "&#;x0123456789abcdefABCDEFltgampquo%\\ \n";
  const auto alpha_len = std::char_traits<char>::length(alphabet);
  for (int trial = 0; trial < 2000; ++trial) {
    Bytes in;
    for (std::size_t i = 0, n = rng() % 40; i < n; ++i) in += alphabet[rng() % alpha_len];
    CHECK(url_decode(in).size() <= in.size());
    CHECK(strip_js_escapes(in).size() <= in.size());
    CHECK(strip_css_escapes(in).size() <= in.size());
    CHECK(html_entity_decode(in).size() <= in.size());
    if (in.find("\\0") == Bytes::npos) CHECK(css_decode(in).size() <= in.size());
  }
}

TEST_CASE("JS escape stripping") {
  CHECK(strip_js_escapes("a\\'b") == "ab");
  CHECK(strip_js_escapes("a\\\"b\\\\c") == "abc");
  CHECK(strip_js_escapes("\\x3cz\\u003cz\\u{1F600}z") == "zzz");
  CHECK(strip_js_escapes("\\n\\t\\r\\b\\f\\v\\0\\/") == "");
  CHECK(strip_js_escapes("\\q") == "\\q");
  CHECK(strip_js_escapes("\\xZZ") == "\\xZZ");
  CHECK(strip_js_escapes("tail\\") == "tail\\");
}

TEST_CASE("CSS escape stripping") {
  CHECK(strip_css_escapes("\\22 x") == "x");
  CHECK(strip_css_escapes("\\\"y") == "y");
  CHECK(strip_css_escapes("a\\") == "a\\");
}
