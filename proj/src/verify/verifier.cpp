#include "graybox/verify/verifier.hpp"

#include <stdexcept>

#include "graybox/context/decoders.hpp"

namespace graybox::verify {

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::CorrectSanitization: return "CorrectSanitization";
    case Outcome::FlawArbitraryJs: return "FlawArbitraryJs";
    case Outcome::FlawPossiblyArbitraryJs: return "FlawPossiblyArbitraryJs";
    case Outcome::FlawNoJsExecution: return "FlawNoJsExecution";
    case Outcome::FlawManualAnalysis: return "FlawManualAnalysis";
  }
  return "?";
}

std::string_view severity_phrase(Outcome outcome) {
  switch (outcome) {
    case Outcome::CorrectSanitization: return "correct sanitization";
    case Outcome::FlawArbitraryJs: return "permits arbitrary JavaScript execution";
    case Outcome::FlawPossiblyArbitraryJs: return "possibly permits arbitrary JavaScript execution";
    case Outcome::FlawNoJsExecution: return "does not permit JavaScript execution";
    case Outcome::FlawManualAnalysis: return "requires manual analysis";
  }
  return "?";
}

bool has_escape_condition(NodeKind kind) {
  switch (kind) {
    case NodeKind::HtmlText:
    case NodeKind::HtmlAttrDoubleQuoted:
    case NodeKind::HtmlAttrSingleQuoted:
    case NodeKind::HtmlData:
    case NodeKind::Uri:
    case NodeKind::JsStringDouble:
    case NodeKind::JsStringSingle:
    case NodeKind::CssStringDouble:
    case NodeKind::CssStringSingle:
      return true;
    default:
      return false;
  }
}

namespace {

bool contains(BytesView v, char c) { return v.find(c) != BytesView::npos; }

bool has_unescaped_slash(BytesView v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '/' && (i == 0 || v[i - 1] != '\\')) return true;
  }
  return false;
}

char string_quote(NodeKind kind) {
  return (kind == NodeKind::JsStringDouble || kind == NodeKind::CssStringDouble) ? '"' : '\'';
}

}  // namespace

bool escape_condition(NodeKind kind, BytesView v, std::optional<UriPosition> position) {
  switch (kind) {
    case NodeKind::HtmlText:
      return contains(v, '<');
    case NodeKind::HtmlAttrDoubleQuoted:
      return contains(v, '"');
    case NodeKind::HtmlAttrSingleQuoted:
      return contains(v, '\'');
    case NodeKind::HtmlData:
      return contains(v, '<') && has_unescaped_slash(v);
    case NodeKind::Uri:
      return position == UriPosition::Beginning ? contains(v, ':') : contains(v, '&');
    case NodeKind::JsStringDouble:
    case NodeKind::JsStringSingle: {
      const auto stripped = context::strip_js_escapes(v);
      return contains(stripped, string_quote(kind)) || contains(stripped, '\\');
    }
    case NodeKind::CssStringDouble:
    case NodeKind::CssStringSingle: {
      const auto stripped = context::strip_css_escapes(v);
      return contains(stripped, string_quote(kind)) || contains(stripped, '\\');
    }
    default:
      throw std::logic_error("no escape condition for " + std::string(context::to_string(kind)));
  }
}

Outcome classify_severity(NodeKind kind, std::optional<UriPosition> position, BytesView v) {
  if (kind == NodeKind::Uri && position == UriPosition::Elsewhere) return Outcome::FlawNoJsExecution;
  if (kind == NodeKind::JsStringDouble || kind == NodeKind::JsStringSingle) {
    const auto stripped = context::strip_js_escapes(v);
    if (!contains(stripped, string_quote(kind)) && contains(stripped, '\\')) return Outcome::FlawPossiblyArbitraryJs;
  }
  return Outcome::FlawArbitraryJs;
}

Verdict verify(BytesView matched_bytes, const context::BrowserContext& ctx) {
  Verdict verdict;
  Bytes v(matched_bytes);
  for (std::size_t i = 0; i < ctx.chain.size(); ++i) {
    const auto& node = ctx.chain[i];
    VerifyStep step;
    step.node = i;
    step.value = v;
    step.node_text = node.content;
    if (!ctx.placeholder.empty()) {
      for (auto p = step.node_text.find(ctx.placeholder); p != Bytes::npos;
           p = step.node_text.find(ctx.placeholder, p + v.size())) {
        step.node_text.replace(p, ctx.placeholder.size(), v);
      }
    }
    if (!has_escape_condition(node.kind)) {
      step.escaped = true;
      verdict.trace.push_back(std::move(step));
      verdict.outcome = Outcome::FlawManualAnalysis;
      verdict.failing_node = i;
      verdict.evidence = v;
      return verdict;
    }
    if (escape_condition(node.kind, v, node.position)) {
      step.escaped = true;
      verdict.trace.push_back(std::move(step));
      verdict.outcome = classify_severity(node.kind, node.position, v);
      verdict.failing_node = i;
      verdict.evidence = v;
      return verdict;
    }
    step.node_text_decoded = context::decode_node(node.kind, step.node_text);
    v = context::decode_node(node.kind, v);
    verdict.trace.push_back(std::move(step));
  }
  return verdict;
}

}  // namespace graybox::verify
