#include "graybox/context/context.hpp"

#include <algorithm>
#include <array>

#include "graybox/context/decoders.hpp"

namespace graybox::context {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::HtmlText: return "HtmlText";
    case NodeKind::HtmlAttrDoubleQuoted: return "HtmlAttrDoubleQuoted";
    case NodeKind::HtmlAttrSingleQuoted: return "HtmlAttrSingleQuoted";
    case NodeKind::HtmlAttrUnquoted: return "HtmlAttrUnquoted";
    case NodeKind::HtmlData: return "HtmlData";
    case NodeKind::Uri: return "Uri";
    case NodeKind::JsStringDouble: return "JsStringDouble";
    case NodeKind::JsStringSingle: return "JsStringSingle";
    case NodeKind::CssStringDouble: return "CssStringDouble";
    case NodeKind::CssStringSingle: return "CssStringSingle";
    case NodeKind::CssPropertyValue: return "CssPropertyValue";
    case NodeKind::CssUri: return "CssUri";
    case NodeKind::JsOther: return "JsOther";
    case NodeKind::HtmlOther: return "HtmlOther";
    case NodeKind::CssOther: return "CssOther";
    case NodeKind::UriScheme: return "UriScheme";
  }
  return "?";
}

std::string_view describe(NodeKind kind) {
  switch (kind) {
    case NodeKind::HtmlText: return "HTML text";
    case NodeKind::HtmlAttrDoubleQuoted: return "HTML double-quoted attribute value";
    case NodeKind::HtmlAttrSingleQuoted: return "HTML single-quoted attribute value";
    case NodeKind::HtmlAttrUnquoted: return "HTML unquoted attribute value";
    case NodeKind::HtmlData: return "HTML data";
    case NodeKind::Uri: return "URI";
    case NodeKind::JsStringDouble: return "JavaScript double-quoted string";
    case NodeKind::JsStringSingle: return "JavaScript single-quoted string";
    case NodeKind::CssStringDouble: return "CSS double-quoted string";
    case NodeKind::CssStringSingle: return "CSS single-quoted string";
    case NodeKind::CssPropertyValue: return "CSS property value";
    case NodeKind::CssUri: return "CSS unquoted url()";
    case NodeKind::JsOther: return "JavaScript code";
    case NodeKind::HtmlOther: return "HTML markup";
    case NodeKind::CssOther: return "CSS syntax";
    case NodeKind::UriScheme: return "URI with non-javascript scheme";
  }
  return "?";
}

std::string_view to_string(UriPosition position) {
  return position == UriPosition::Beginning ? "beginning" : "elsewhere";
}

bool is_html_family(NodeKind k) {
  return k == NodeKind::HtmlText || k == NodeKind::HtmlAttrDoubleQuoted || k == NodeKind::HtmlAttrSingleQuoted ||
         k == NodeKind::HtmlAttrUnquoted || k == NodeKind::HtmlData || k == NodeKind::HtmlOther;
}

bool is_js_family(NodeKind k) {
  return k == NodeKind::JsStringDouble || k == NodeKind::JsStringSingle || k == NodeKind::JsOther;
}

bool is_css_family(NodeKind k) {
  return k == NodeKind::CssStringDouble || k == NodeKind::CssStringSingle || k == NodeKind::CssPropertyValue ||
         k == NodeKind::CssUri || k == NodeKind::CssOther;
}

namespace {

bool is_attr(NodeKind k) {
  return k == NodeKind::HtmlAttrDoubleQuoted || k == NodeKind::HtmlAttrSingleQuoted || k == NodeKind::HtmlAttrUnquoted;
}

bool is_css_string(NodeKind k) { return k == NodeKind::CssStringDouble || k == NodeKind::CssStringSingle; }

}  // namespace

bool is_legal_transition(NodeKind parent, NodeKind child) {
  if (is_attr(parent)) {
    return child == NodeKind::Uri || child == NodeKind::UriScheme || is_css_family(child) || is_js_family(child);
  }
  if (parent == NodeKind::HtmlData) return is_js_family(child) || is_css_family(child);
  if (parent == NodeKind::Uri) return is_js_family(child);
  if (is_css_string(parent)) return child == NodeKind::Uri || child == NodeKind::UriScheme;
  return false;
}

bool is_legal_chain(const std::vector<NodeKind>& chain) {
  if (chain.empty() || !is_html_family(chain.front())) return false;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (!is_legal_transition(chain[i - 1], chain[i])) return false;
  }
  return true;
}

std::vector<NodeKind> BrowserContext::kinds() const {
  std::vector<NodeKind> out;
  for (const auto& n : chain) out.push_back(n.kind);
  return out;
}

std::string BrowserContext::signature() const {
  std::string out;
  for (const auto& n : chain) {
    if (!out.empty()) out += " > ";
    out += to_string(n.kind);
    if (n.position) {
      out += "(";
      out += to_string(*n.position);
      out += ")";
    }
  }
  return out;
}

Bytes decode_node(NodeKind kind, BytesView content) {
  switch (kind) {
    case NodeKind::HtmlAttrDoubleQuoted:
    case NodeKind::HtmlAttrSingleQuoted:
    case NodeKind::HtmlAttrUnquoted:
      return html_entity_decode(content);
    case NodeKind::Uri:
      return url_decode(content);
    case NodeKind::CssStringDouble:
    case NodeKind::CssStringSingle:
      return css_decode(content);
    default:
      return Bytes(content);
  }
}

std::optional<Descent> decode_and_descend(const SyntaxNode& node) {
  if (node.embeds == Language::None) return std::nullopt;
  Descent d{node.embeds, decode_node(node.kind, node.content)};
  if (node.kind == NodeKind::Uri && node.embeds == Language::JavaScript) {
    // Keep only what follows the scheme.
    const auto colon = d.content.find(':');
    d.content = colon == Bytes::npos ? Bytes{} : d.content.substr(colon + 1);
  }
  return d;
}

// ---- HTML ---------------------------------------------------------------------

namespace {

bool is_html_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

constexpr std::array<std::string_view, 16> kUriAttributes = {
    "href",     "src",    "action",   "formaction", "data",     "poster", "background", "cite",
    "longdesc", "usemap", "codebase", "manifest",   "xlink:href", "icon", "lowsrc",   "dynsrc",
};

Language attribute_language(std::string_view attr) {
  if (attr.size() > 2 && attr.substr(0, 2) == "on") return Language::JavaScript;
  if (attr == "style") return Language::CssDeclarations;
  if (std::find(kUriAttributes.begin(), kUriAttributes.end(), attr) != kUriAttributes.end()) return Language::Uri;
  return Language::None;
}

bool is_javascript_type(std::string_view type) {
  static constexpr std::array<std::string_view, 10> kTypes = {
      "",  "text/javascript", "application/javascript", "module", "text/ecmascript", "application/ecmascript",
      "application/x-javascript", "text/x-javascript", "text/jscript", "text/livescript",
  };
  return std::find(kTypes.begin(), kTypes.end(), type) != kTypes.end();
}

std::string trim_lower(BytesView s) {
  while (!s.empty() && is_html_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_html_space(s.back())) s.remove_suffix(1);
  return to_lower_ascii(s);
}

/// Offset of "</name" (case-insensitive, followed by a tag terminator) at or
/// after `from`, or body.size().
std::size_t find_end_tag(BytesView body, std::size_t from, std::string_view name) {
  for (std::size_t i = body.find("</", from); i != BytesView::npos; i = body.find("</", i + 1)) {
    const std::size_t after = i + 2 + name.size();
    if (after > body.size()) break;
    if (!iequals_ascii(body.substr(i + 2, name.size()), name)) continue;
    if (after == body.size() || is_html_space(body[after]) || body[after] == '/' || body[after] == '>') return i;
  }
  return body.size();
}

}  // namespace

std::vector<HtmlSegment> parse_html(BytesView body) {
  std::vector<HtmlSegment> out;
  const std::size_t n = body.size();
  std::size_t text_start = 0;
  std::size_t i = 0;
  auto close_text = [&](std::size_t end) {
    if (end > text_start) out.push_back({text_start, end, NodeKind::HtmlText, "", "", Language::None});
  };
  auto other = [&](std::size_t b, std::size_t e, std::string element, std::string attribute = "") {
    if (e > b) out.push_back({b, e, NodeKind::HtmlOther, std::move(element), std::move(attribute), Language::None});
  };

  while (i < n) {
    if (body[i] != '<' || i + 1 >= n) {
      ++i;
      continue;
    }
    const char next = body[i + 1];
    if (body.substr(i, 4) == "<!--") {
      close_text(i);
      auto end = body.find("-->", i + 4);
      const std::size_t content_end = end == BytesView::npos ? n : end;
      other(i + 4, content_end, "#comment");
      i = end == BytesView::npos ? n : end + 3;
      text_start = i;
      continue;
    }
    if (next == '!' || next == '?') {
      close_text(i);
      const auto end = body.find('>', i + 2);
      const std::size_t content_end = end == BytesView::npos ? n : end;
      other(i + 2, content_end, next == '!' ? "#doctype" : "#bogus-comment");
      i = end == BytesView::npos ? n : end + 1;
      text_start = i;
      continue;
    }
    if (next == '/' && i + 2 < n && is_ascii_alpha(static_cast<unsigned char>(body[i + 2]))) {
      close_text(i);
      const auto end = body.find('>', i + 2);
      const std::size_t content_end = end == BytesView::npos ? n : end;
      other(i + 2, content_end, "#end-tag");
      i = end == BytesView::npos ? n : end + 1;
      text_start = i;
      continue;
    }
    if (!is_ascii_alpha(static_cast<unsigned char>(next))) {
      ++i;
      continue;
    }

    // Start tag.
    close_text(i);
    std::size_t j = i + 1;
    while (j < n && !is_html_space(body[j]) && body[j] != '/' && body[j] != '>') ++j;
    const std::string element = to_lower_ascii(body.substr(i + 1, j - i - 1));
    other(i + 1, j, "#tag-name");
    std::string script_type;
    std::vector<HtmlSegment> attrs;
    while (j < n) {
      while (j < n && (is_html_space(body[j]) || body[j] == '/')) ++j;
      if (j >= n) break;
      if (body[j] == '>') {
        ++j;
        break;
      }
      const std::size_t name_start = j;
      ++j;  // a leading '=' belongs to the name
      while (j < n && !is_html_space(body[j]) && body[j] != '/' && body[j] != '>' && body[j] != '=') ++j;
      const std::string attr = to_lower_ascii(body.substr(name_start, j - name_start));
      other(name_start, j, element, "#attribute-name");
      std::size_t k = j;
      while (k < n && is_html_space(body[k])) ++k;
      if (k >= n || body[k] != '=') continue;
      ++k;
      while (k < n && is_html_space(body[k])) ++k;
      if (k >= n) {
        j = k;
        break;
      }
      std::size_t vb = 0;
      std::size_t ve = 0;
      NodeKind kind = NodeKind::HtmlAttrUnquoted;
      if (body[k] == '"' || body[k] == '\'') {
        kind = body[k] == '"' ? NodeKind::HtmlAttrDoubleQuoted : NodeKind::HtmlAttrSingleQuoted;
        vb = k + 1;
        const auto close = body.find(body[k], vb);
        ve = close == BytesView::npos ? n : close;
        j = close == BytesView::npos ? n : close + 1;
      } else {
        vb = k;
        ve = k;
        while (ve < n && !is_html_space(body[ve]) && body[ve] != '>') ++ve;
        j = ve;
      }
      if (attr == "type") script_type = trim_lower(html_entity_decode(body.substr(vb, ve - vb)));
      out.push_back({vb, ve, kind, element, attr, attribute_language(attr)});
    }
    i = j;
    text_start = i;

    if (element == "script" || element == "style") {
      const auto close = find_end_tag(body, i, element);
      Language lang = Language::None;
      if (element == "style") {
        lang = Language::CssStylesheet;
      } else if (is_javascript_type(script_type)) {
        lang = Language::JavaScript;
      }
      if (close > i) out.push_back({i, close, NodeKind::HtmlData, element, "", lang});
      i = close;
      text_start = i;
    } else if (element == "textarea" || element == "title") {
      const auto close = find_end_tag(body, i, element);
      if (close > i) out.push_back({i, close, NodeKind::HtmlText, element, "", Language::None});
      i = close;
      text_start = i;
    } else if (element == "xmp" || element == "iframe" || element == "noembed" || element == "noframes" ||
               element == "plaintext") {
      const auto close = element == "plaintext" ? n : find_end_tag(body, i, element);
      other(i, close, element);
      i = close;
      text_start = i;
    }
  }
  close_text(n);
  return out;
}

// ---- recursive engine -----------------------------------------------------------

namespace {

struct Occurrence {
  std::size_t pos = 0;
  std::string token;
};

struct Region {
  std::size_t begin = 0;
  std::size_t end = 0;
  SyntaxNode node;
  /// Overrides text[begin, end) as the node content.
  std::optional<Bytes> content;
};

std::vector<Occurrence> find_occurrences(BytesView text, const std::vector<std::string>& tokens) {
  std::vector<Occurrence> out;
  for (const auto& t : tokens) {
    if (t.empty()) continue;
    for (auto p = text.find(t); p != BytesView::npos; p = text.find(t, p + t.size())) out.push_back({p, t});
  }
  std::sort(out.begin(), out.end(), [](const Occurrence& a, const Occurrence& b) { return a.pos < b.pos; });
  return out;
}

SyntaxNode make_node(NodeKind kind, std::string detail, Language embeds = Language::None) {
  SyntaxNode n;
  n.kind = kind;
  n.detail = std::move(detail);
  n.embeds = embeds;
  return n;
}

// ---- JavaScript lexer ----

bool regex_can_follow(char prev, std::string_view prev_word) {
  if (!prev_word.empty()) {
    static constexpr std::array<std::string_view, 10> kKeywords = {
        "return", "typeof", "instanceof", "in", "of", "new", "delete", "void", "throw", "case"};
    return std::find(kKeywords.begin(), kKeywords.end(), prev_word) != kKeywords.end();
  }
  return prev == 0 || std::string_view("(,=:[!&|?{};+-*%<>~^").find(prev) != std::string_view::npos;
}

std::vector<Region> lex_js(BytesView text) {
  std::vector<Region> out;
  const std::size_t n = text.size();
  char prev = 0;
  std::string prev_word;
  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      while (j < n && text[j] != c && text[j] != '\n' && text[j] != '\r') j += text[j] == '\\' ? 2 : 1;
      j = std::min(j, n);
      out.push_back({i + 1, j, make_node(c == '"' ? NodeKind::JsStringDouble : NodeKind::JsStringSingle,
                                         "string literal"), std::nullopt});
      i = (j < n && text[j] == c) ? j + 1 : j;
      prev = c;
      prev_word.clear();
    } else if (c == '`') {
      std::size_t j = i + 1;
      while (j < n && text[j] != '`') j += text[j] == '\\' ? 2 : 1;
      j = std::min(j, n);
      out.push_back({i + 1, j, make_node(NodeKind::JsOther, "template literal"), std::nullopt});
      i = j < n ? j + 1 : n;
      prev = '`';
      prev_word.clear();
    } else if (c == '/' && i + 1 < n && text[i + 1] == '/') {
      auto j = text.find('\n', i);
      j = j == BytesView::npos ? n : j;
      out.push_back({i + 2, j, make_node(NodeKind::JsOther, "comment"), std::nullopt});
      i = j;
    } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      auto j = text.find("*/", i + 2);
      const std::size_t end = j == BytesView::npos ? n : j;
      out.push_back({i + 2, end, make_node(NodeKind::JsOther, "comment"), std::nullopt});
      i = j == BytesView::npos ? n : j + 2;
    } else if (c == '/' && regex_can_follow(prev, prev_word)) {
      std::size_t j = i + 1;
      bool in_class = false;
      while (j < n && text[j] != '\n') {
        if (text[j] == '\\') {
          j += 2;
          continue;
        }
        if (text[j] == '[') in_class = true;
        if (text[j] == ']') in_class = false;
        if (text[j] == '/' && !in_class) break;
        ++j;
      }
      j = std::min(j, n);
      out.push_back({i + 1, j, make_node(NodeKind::JsOther, "regular expression"), std::nullopt});
      i = j < n ? j + 1 : n;
      prev = '/';
      prev_word.clear();
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
    } else if (is_ascii_alnum(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < n && (is_ascii_alnum(static_cast<unsigned char>(text[j])) || text[j] == '_' || text[j] == '$')) ++j;
      prev_word = std::string(text.substr(i, j - i));
      prev = 'a';
      i = j;
    } else {
      prev = c;
      prev_word.clear();
      ++i;
    }
  }
  return out;
}

// ---- CSS lexer ----

bool is_nested_rule_at(std::string_view prelude) {
  static constexpr std::array<std::string_view, 7> kAtRules = {"@media", "@supports", "@document", "@-moz-document",
                                                               "@layer", "@container", "@scope"};
  const auto lower = to_lower_ascii(prelude);
  for (const auto& r : kAtRules) {
    if (lower.rfind(r, 0) == 0) return true;
  }
  return false;
}

std::vector<Region> lex_css(BytesView text, bool declarations_only) {
  enum class Block { Rules, Declarations };
  std::vector<Region> out;
  std::vector<Block> stack{declarations_only ? Block::Declarations : Block::Rules};
  bool in_value = false;
  std::string property;
  std::string prelude;
  std::size_t run_start = 0;
  const std::size_t n = text.size();

  auto run_node = [&]() -> SyntaxNode {
    if (stack.back() == Block::Rules) return make_node(NodeKind::CssOther, "selector");
    if (in_value) return make_node(NodeKind::CssPropertyValue, property);
    return make_node(NodeKind::CssOther, "property name");
  };
  auto close_run = [&](std::size_t end) {
    if (end > run_start) out.push_back({run_start, end, run_node(), std::nullopt});
  };
  auto preceded_by_url = [&](std::size_t quote_pos) {
    std::size_t k = quote_pos;
    while (k > 0 && (text[k - 1] == ' ' || text[k - 1] == '\t' || text[k - 1] == '\n')) --k;
    return k >= 4 && iequals_ascii(text.substr(k - 4, 4), "url(");
  };

  std::size_t i = 0;
  while (i < n) {
    const char c = text[i];
    if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      close_run(i);
      const auto j = text.find("*/", i + 2);
      const std::size_t end = j == BytesView::npos ? n : j;
      out.push_back({i + 2, end, make_node(NodeKind::CssOther, "comment"), std::nullopt});
      i = j == BytesView::npos ? n : j + 2;
      run_start = i;
    } else if (c == '"' || c == '\'') {
      close_run(i);
      std::size_t j = i + 1;
      while (j < n && text[j] != c && text[j] != '\n') j += text[j] == '\\' ? 2 : 1;
      j = std::min(j, n);
      const bool url = preceded_by_url(i) || (stack.back() == Block::Rules &&
                                              to_lower_ascii(prelude).rfind("@import", 0) == 0);
      const std::string detail = url ? "url" : (in_value ? property : "string");
      out.push_back({i + 1, j,
                     make_node(c == '"' ? NodeKind::CssStringDouble : NodeKind::CssStringSingle, detail,
                               url ? Language::Uri : Language::None),
                     std::nullopt});
      prelude += "\"\"";
      i = (j < n && text[j] == c) ? j + 1 : j;
      run_start = i;
    } else if ((c == 'u' || c == 'U') && i + 4 <= n && iequals_ascii(text.substr(i, 4), "url(") &&
               (i == 0 || !(is_ascii_alnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '-'))) {
      std::size_t k = i + 4;
      while (k < n && (text[k] == ' ' || text[k] == '\t' || text[k] == '\n')) ++k;
      if (k < n && (text[k] == '"' || text[k] == '\'')) {
        i = k;  // the string branch handles it
        continue;
      }
      close_run(i);
      auto close = text.find(')', k);
      const std::size_t end = close == BytesView::npos ? n : close;
      out.push_back({k, end, make_node(NodeKind::CssUri, "url()"), std::nullopt});
      i = close == BytesView::npos ? n : close + 1;
      run_start = i;
    } else if (c == '{') {
      close_run(i);
      if (stack.back() == Block::Rules && is_nested_rule_at(prelude)) {
        stack.push_back(Block::Rules);
      } else {
        stack.push_back(Block::Declarations);
      }
      prelude.clear();
      in_value = false;
      run_start = ++i;
    } else if (c == '}') {
      close_run(i);
      if (stack.size() > 1) stack.pop_back();
      prelude.clear();
      in_value = false;
      run_start = ++i;
    } else if (c == ';') {
      close_run(i);
      prelude.clear();
      in_value = false;
      run_start = ++i;
    } else if (c == ':' && stack.back() == Block::Declarations && !in_value) {
      close_run(i);
      property = trim_lower(text.substr(run_start, i - run_start));
      in_value = true;
      run_start = ++i;
    } else {
      if (stack.back() == Block::Rules) prelude.push_back(c);
      ++i;
    }
  }
  close_run(n);
  return out;
}

// ---- URI lexer ----

bool is_scheme_char(char c) {
  return is_ascii_alnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

/// Removes leading C0/space and all tab/newline characters, as browsers do
/// before reading a scheme.
std::string normalize_uri_head(BytesView text) {
  std::size_t b = 0;
  while (b < text.size() && static_cast<unsigned char>(text[b]) <= 0x20) ++b;
  std::string out;
  for (std::size_t i = b; i < text.size(); ++i) {
    if (text[i] != '\t' && text[i] != '\n' && text[i] != '\r') out.push_back(text[i]);
  }
  return out;
}

std::optional<std::string> uri_scheme(BytesView text) {
  const auto head = normalize_uri_head(text);
  const auto colon = head.find(':');
  if (colon == std::string::npos || colon == 0 || !is_ascii_alpha(static_cast<unsigned char>(head[0]))) {
    return std::nullopt;
  }
  for (std::size_t i = 0; i < colon; ++i) {
    if (!is_scheme_char(head[i])) return std::nullopt;
  }
  return to_lower_ascii(head.substr(0, colon));
}

bool at_uri_beginning(BytesView text, std::size_t pos) {
  const auto before = normalize_uri_head(text.substr(0, pos));
  if (before.empty()) return true;
  if (!is_ascii_alpha(static_cast<unsigned char>(before[0]))) return false;
  return std::all_of(before.begin(), before.end(), is_scheme_char);
}

std::vector<Region> lex_uri(BytesView text, const std::vector<Occurrence>& occurrences) {
  std::vector<Region> out;
  bool elsewhere = false;
  for (const auto& o : occurrences) {
    if (at_uri_beginning(text, o.pos)) {
      auto node = make_node(NodeKind::Uri, "scheme");
      node.position = UriPosition::Beginning;
      out.push_back({o.pos, o.pos + o.token.size(), std::move(node), Bytes(text)});
    } else {
      elsewhere = true;
    }
  }
  if (elsewhere) {
    const auto scheme = uri_scheme(text);
    SyntaxNode node;
    if (scheme && (*scheme == "data" || *scheme == "vbscript")) {
      node = make_node(NodeKind::UriScheme, *scheme + ":");
    } else if (scheme && *scheme == "javascript") {
      node = make_node(NodeKind::Uri, "javascript:", Language::JavaScript);
      node.position = UriPosition::Elsewhere;
    } else {
      node = make_node(NodeKind::Uri, scheme ? *scheme + ":" : "relative");
      node.position = UriPosition::Elsewhere;
    }
    out.push_back({0, text.size(), std::move(node), std::nullopt});
  }
  return out;
}

// ---- driver ----

class Engine {
 public:
  explicit Engine(const std::vector<std::string>& tokens) : tokens_(tokens) {}

  void run(Language lang, BytesView text, const std::vector<SyntaxNode>& chain,
           const std::vector<std::size_t>& offsets) {
    const auto occs = find_occurrences(text, tokens_);
    if (occs.size() != offsets.size()) {
      // Decoding changed the placeholder count; stop at the enclosing node.
      for (std::size_t i = 0; i < offsets.size(); ++i) emit(chain, i < occs.size() ? occs[i].token : "", offsets[i]);
      return;
    }
    if (occs.empty()) return;

    std::vector<Region> regions;
    SyntaxNode fallback;
    switch (lang) {
      case Language::Html:
        for (auto& s : parse_html(text)) {
          auto node = make_node(s.kind, s.attribute.empty() ? s.element : s.attribute, s.embeds);
          if (s.kind == NodeKind::HtmlOther) node.detail = s.element;
          if (s.kind == NodeKind::HtmlText && s.element.empty()) node.detail = "text";
          regions.push_back({s.begin, s.end, std::move(node), std::nullopt});
        }
        fallback = make_node(NodeKind::HtmlOther, "markup");
        break;
      case Language::JavaScript:
        regions = lex_js(text);
        fallback = make_node(NodeKind::JsOther, "code");
        break;
      case Language::CssDeclarations:
      case Language::CssStylesheet:
        regions = lex_css(text, lang == Language::CssDeclarations);
        fallback = make_node(NodeKind::CssOther, "syntax");
        break;
      case Language::Uri:
        regions = lex_uri(text, occs);
        fallback = make_node(NodeKind::Uri, "uri");
        fallback.position = UriPosition::Elsewhere;
        break;
      case Language::None:
        for (std::size_t i = 0; i < occs.size(); ++i) emit(chain, occs[i].token, offsets[i]);
        return;
    }

    // Assign each occurrence to the first region that fully contains it.
    std::vector<std::vector<std::size_t>> assigned(regions.size());
    for (std::size_t i = 0; i < occs.size(); ++i) {
      const auto b = occs[i].pos;
      const auto e = b + occs[i].token.size();
      bool placed = false;
      for (std::size_t r = 0; r < regions.size(); ++r) {
        if (regions[r].begin <= b && e <= regions[r].end) {
          assigned[r].push_back(i);
          placed = true;
          break;
        }
      }
      if (!placed) {
        auto leaf = chain;
        auto node = fallback;
        node.content = Bytes(text);
        leaf.push_back(std::move(node));
        emit(leaf, occs[i].token, offsets[i]);
      }
    }

    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (assigned[r].empty()) continue;
      auto node = regions[r].node;
      node.content = regions[r].content ? *regions[r].content
                                        : Bytes(text.substr(regions[r].begin, regions[r].end - regions[r].begin));
      auto next_chain = chain;
      next_chain.push_back(node);
      std::vector<std::size_t> sub_offsets;
      for (const auto i : assigned[r]) sub_offsets.push_back(offsets[i]);
      const auto descent = next_chain.size() < kMaxDepth ? decode_and_descend(node) : std::nullopt;
      if (!descent) {
        for (const auto i : assigned[r]) emit(next_chain, occs[i].token, offsets[i]);
        continue;
      }
      if (regions[r].content) {
        // Region content is shared with other regions; only this region's
        // placeholders may surface below it.
        for (const auto i : assigned[r]) emit(next_chain, occs[i].token, offsets[i]);
        continue;
      }
      run(descent->language, descent->content, next_chain, sub_offsets);
    }
  }

  std::vector<BrowserContext> take() {
    std::stable_sort(out_.begin(), out_.end(),
                     [](const BrowserContext& a, const BrowserContext& b) { return a.offset < b.offset; });
    return std::move(out_);
  }

 private:
  void emit(const std::vector<SyntaxNode>& chain, const std::string& token, std::size_t offset) {
    BrowserContext ctx;
    ctx.chain = chain;
    if (ctx.chain.empty()) ctx.chain.push_back(make_node(NodeKind::HtmlOther, "markup"));
    ctx.placeholder = token;
    ctx.offset = offset;
    out_.push_back(std::move(ctx));
  }

  const std::vector<std::string>& tokens_;
  std::vector<BrowserContext> out_;
};

}  // namespace

std::vector<BrowserContext> compute_contexts(BytesView body, const std::vector<std::string>& placeholders) {
  Engine engine(placeholders);
  std::vector<std::size_t> offsets;
  for (const auto& o : find_occurrences(body, placeholders)) offsets.push_back(o.pos);
  engine.run(Language::Html, body, {}, offsets);
  return engine.take();
}

}  // namespace graybox::context
