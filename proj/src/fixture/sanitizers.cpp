#include "graybox/fixture/sanitizers.hpp"

#include <cctype>

namespace graybox::fixture {

namespace {

constexpr char kHex[] = "0123456789abcdef";

bool is_alnum(unsigned char c) { return std::isalnum(c) != 0; }

void append_hex(std::string& out, unsigned char c) {
  out += kHex[c >> 4];
  out += kHex[c & 0xF];
}

}  // namespace

std::string html_entities(std::string_view in, QuoteMode mode) {
  std::string out;
  out.reserve(in.size());
  for (const char c : in) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += mode == QuoteMode::NoQuotes ? "\"" : "&quot;"; break;
      case '\'': out += mode == QuoteMode::Quotes ? "&#039;" : "'"; break;
      default: out += c;
    }
  }
  return out;
}

std::string addslashes(std::string_view in) {
  std::string out;
  for (const char c : in) {
    if (c == '\0') {
      out += "\\0";
      continue;
    }
    if (c == '\'' || c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string escape_quotes_only(std::string_view in) {
  std::string out;
  for (const char c : in) {
    if (c == '\'' || c == '"') out += '\\';
    out += c;
  }
  return out;
}

std::string rawurlencode(std::string_view in) {
  std::string out;
  for (const char ch : in) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_alnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += ch;
    } else {
      out += '%';
      out += static_cast<char>(std::toupper(kHex[c >> 4]));
      out += static_cast<char>(std::toupper(kHex[c & 0xF]));
    }
  }
  return out;
}

std::string js_hex_escape(std::string_view in) {
  std::string out;
  for (const char ch : in) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || is_alnum(c) || c == ' ' || c == ',' || c == '.' || c == '_') {
      out += ch;
    } else {
      out += "\\x";
      append_hex(out, c);
    }
  }
  return out;
}

std::string css_hex_escape(std::string_view in) {
  std::string out;
  for (const char ch : in) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || is_alnum(c)) {
      out += ch;
    } else {
      out += '\\';
      append_hex(out, c);
      out += ' ';
    }
  }
  return out;
}

std::string strip_angles(std::string_view in) {
  std::string out;
  for (const char c : in) {
    if (c != '<' && c != '>') out += c;
  }
  return out;
}

}  // namespace graybox::fixture
