#include "graybox/context/decoders.hpp"

#include <array>
#include <string_view>

namespace graybox::context {

namespace {

struct NamedEntity {
  std::string_view name;
  char32_t code;
  bool legacy;  // also recognized without the trailing ';'
};

// Every entry decodes to no more UTF-8 bytes than its reference occupies.
constexpr std::array<NamedEntity, 58> kEntities{{
    {"amp", U'&', true},       {"AMP", U'&', true},      {"lt", U'<', true},        {"LT", U'<', true},
    {"gt", U'>', true},        {"GT", U'>', true},       {"quot", U'"', true},      {"QUOT", U'"', true},
    {"nbsp", 0xA0, true},      {"copy", 0xA9, true},     {"reg", 0xAE, true},       {"apos", U'\'', false},
    {"colon", U':', false},    {"sol", U'/', false},     {"bsol", U'\\', false},    {"lpar", U'(', false},
    {"rpar", U')', false},     {"grave", U'`', false},   {"equals", U'=', false},   {"semi", U';', false},
    {"comma", U',', false},    {"period", U'.', false},  {"excl", U'!', false},     {"num", U'#', false},
    {"dollar", U'$', false},   {"percnt", U'%', false},  {"plus", U'+', false},     {"lsqb", U'[', false},
    {"rsqb", U']', false},     {"lbrack", U'[', false},  {"rbrack", U']', false},   {"lcub", U'{', false},
    {"rcub", U'}', false},     {"lbrace", U'{', false},  {"rbrace", U'}', false},   {"verbar", U'|', false},
    {"vert", U'|', false},     {"ast", U'*', false},     {"quest", U'?', false},    {"commat", U'@', false},
    {"lowbar", U'_', false},   {"Tab", U'\t', false},    {"NewLine", U'\n', false}, {"hellip", 0x2026, false},
    {"mdash", 0x2014, false},  {"ndash", 0x2013, false}, {"lsquo", 0x2018, false},  {"rsquo", 0x2019, false},
    {"ldquo", 0x201C, false},  {"rdquo", 0x201D, false}, {"laquo", 0xAB, false},    {"raquo", 0xBB, false},
    {"times", 0xD7, false},    {"divide", 0xF7, false},  {"middot", 0xB7, false},   {"euro", 0x20AC, false},
    {"trade", 0x2122, false},  {"deg", 0xB0, false},
}};

char32_t sanitize_code_point(std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0xFFFD;
  return static_cast<char32_t>(cp);
}

bool is_css_whitespace(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

/// Length of the CSS escape starting at in[i] == '\\', or 0 for a lone
/// trailing backslash. Writes the decoded text to `decoded`.
std::size_t css_escape(BytesView in, std::size_t i, Bytes* decoded) {
  if (i + 1 >= in.size()) return 0;
  const char next = in[i + 1];
  if (is_hex_digit(static_cast<unsigned char>(next))) {
    std::size_t j = i + 1;
    std::uint32_t cp = 0;
    while (j < in.size() && j < i + 7 && is_hex_digit(static_cast<unsigned char>(in[j]))) {
      cp = cp * 16 + static_cast<std::uint32_t>(hex_value(static_cast<unsigned char>(in[j])));
      ++j;
    }
    if (j < in.size() && is_css_whitespace(in[j])) {
      j += (in[j] == '\r' && j + 1 < in.size() && in[j + 1] == '\n') ? 2 : 1;
    }
    if (decoded) append_utf8(*decoded, sanitize_code_point(cp));
    return j - i;
  }
  if (next == '\n' || next == '\f') return 2;
  if (next == '\r') return (i + 2 < in.size() && in[i + 2] == '\n') ? 3 : 2;
  if (decoded) decoded->push_back(next);
  return 2;
}

bool is_line_terminator_at(BytesView in, std::size_t i, std::size_t* len) {
  if (in[i] == '\n' || in[i] == '\r') {
    *len = (in[i] == '\r' && i + 1 < in.size() && in[i + 1] == '\n') ? 2 : 1;
    return true;
  }
  // U+2028 / U+2029 in UTF-8
  if (in.substr(i, 3) == "\xE2\x80\xA8" || in.substr(i, 3) == "\xE2\x80\xA9") {
    *len = 3;
    return true;
  }
  return false;
}

/// Length of the recognized JavaScript escape at in[i] == '\\', or 0.
std::size_t js_escape_length(BytesView in, std::size_t i) {
  if (i + 1 >= in.size()) return 0;
  const char c = in[i + 1];
  auto hex_run = [&](std::size_t from, std::size_t n) {
    if (from + n > in.size()) return false;
    for (std::size_t k = from; k < from + n; ++k) {
      if (!is_hex_digit(static_cast<unsigned char>(in[k]))) return false;
    }
    return true;
  };
  switch (c) {
    case '\'': case '"': case '\\': case 'b': case 'f': case 'n': case 'r': case 't': case 'v': case '/':
      return 2;
    case 'x':
      return hex_run(i + 2, 2) ? 4 : 0;
    case 'u': {
      if (hex_run(i + 2, 4)) return 6;
      if (i + 2 < in.size() && in[i + 2] == '{') {
        std::size_t j = i + 3;
        while (j < in.size() && is_hex_digit(static_cast<unsigned char>(in[j]))) ++j;
        if (j > i + 3 && j < in.size() && in[j] == '}') return j - i + 1;
      }
      return 0;
    }
    default:
      break;
  }
  if (is_ascii_digit(static_cast<unsigned char>(c))) return 2;
  std::size_t term = 0;
  if (is_line_terminator_at(in, i + 1, &term)) return 1 + term;
  return 0;
}

}  // namespace

Bytes html_entity_decode(BytesView in) {
  Bytes out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '&' || i + 1 >= in.size()) {
      out.push_back(in[i++]);
      continue;
    }
    if (in[i + 1] == '#') {
      std::size_t j = i + 2;
      const bool hex = j < in.size() && (in[j] == 'x' || in[j] == 'X');
      if (hex) ++j;
      const std::size_t digits_start = j;
      std::uint32_t cp = 0;
      while (j < in.size() && (hex ? is_hex_digit(static_cast<unsigned char>(in[j]))
                                   : is_ascii_digit(static_cast<unsigned char>(in[j])))) {
        const auto d = hex ? hex_value(static_cast<unsigned char>(in[j])) : in[j] - '0';
        cp = cp > 0x10FFFF ? cp : cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        ++j;
      }
      if (j == digits_start) {
        out.push_back(in[i++]);
        continue;
      }
      if (j < in.size() && in[j] == ';') ++j;
      append_utf8(out, sanitize_code_point(cp));
      i = j;
      continue;
    }
    // Longest matching name.
    const NamedEntity* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& e : kEntities) {
      if (in.substr(i + 1, e.name.size()) != e.name) continue;
      const std::size_t after = i + 1 + e.name.size();
      const bool semicolon = after < in.size() && in[after] == ';';
      if (!semicolon) {
        if (!e.legacy) continue;
        // Attribute-value rule: a legacy reference followed by '=' or an
        // alphanumeric is left as text.
        if (after < in.size() && (in[after] == '=' || is_ascii_alnum(static_cast<unsigned char>(in[after])))) continue;
      }
      const std::size_t len = 1 + e.name.size() + (semicolon ? 1 : 0);
      if (len > best_len) {
        best = &e;
        best_len = len;
      }
    }
    if (!best) {
      out.push_back(in[i++]);
      continue;
    }
    append_utf8(out, best->code);
    i += best_len;
  }
  return out;
}

Bytes url_decode(BytesView in) {
  Bytes out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '%' && i + 2 < in.size() && is_hex_digit(static_cast<unsigned char>(in[i + 1])) && is_hex_digit(static_cast<unsigned char>(in[i + 2]))) {
      out.push_back(static_cast<char>(hex_value(static_cast<unsigned char>(in[i + 1])) * 16 +
                                      hex_value(static_cast<unsigned char>(in[i + 2]))));
      i += 2;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

Bytes css_decode(BytesView in) {
  Bytes out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '\\') {
      out.push_back(in[i++]);
      continue;
    }
    const auto len = css_escape(in, i, &out);
    if (len == 0) {
      ++i;  // lone trailing backslash is dropped inside strings
      continue;
    }
    i += len;
  }
  return out;
}

Bytes strip_js_escapes(BytesView in) {
  Bytes out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '\\') {
      const auto len = js_escape_length(in, i);
      if (len > 0) {
        i += len;
        continue;
      }
    }
    out.push_back(in[i++]);
  }
  return out;
}

Bytes strip_css_escapes(BytesView in) {
  Bytes out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] == '\\') {
      const auto len = css_escape(in, i, nullptr);
      if (len > 0) {
        i += len;
        continue;
      }
    }
    out.push_back(in[i++]);
  }
  return out;
}

}  // namespace graybox::context
