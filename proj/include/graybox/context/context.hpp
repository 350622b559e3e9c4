#pragma once

// Browser context model: recursive HTML / CSS / URI / JavaScript parsing of
// a response body in which payload echoes were replaced by placeholders.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graybox/bytes.hpp"

namespace graybox::context {

enum class NodeKind {
  HtmlText,
  HtmlAttrDoubleQuoted,
  HtmlAttrSingleQuoted,
  HtmlAttrUnquoted,
  HtmlData,
  Uri,
  JsStringDouble,
  JsStringSingle,
  CssStringDouble,
  CssStringSingle,
  CssPropertyValue,
  CssUri,
  JsOther,
  HtmlOther,
  CssOther,
  UriScheme,
};

inline constexpr NodeKind kAllKinds[] = {
    NodeKind::HtmlText,        NodeKind::HtmlAttrDoubleQuoted, NodeKind::HtmlAttrSingleQuoted,
    NodeKind::HtmlAttrUnquoted, NodeKind::HtmlData,            NodeKind::Uri,
    NodeKind::JsStringDouble,  NodeKind::JsStringSingle,       NodeKind::CssStringDouble,
    NodeKind::CssStringSingle, NodeKind::CssPropertyValue,     NodeKind::CssUri,
    NodeKind::JsOther,         NodeKind::HtmlOther,            NodeKind::CssOther,
    NodeKind::UriScheme,
};

/// Stable identifier, e.g. "HtmlAttrDoubleQuoted".
std::string_view to_string(NodeKind kind);
/// Prose name, e.g. "HTML double-quoted attribute value".
std::string_view describe(NodeKind kind);

enum class UriPosition { Beginning, Elsewhere };
std::string_view to_string(UriPosition position);

bool is_html_family(NodeKind kind);
bool is_js_family(NodeKind kind);
bool is_css_family(NodeKind kind);

/// Edge of the embedding graph: may `child` directly follow `parent`?
bool is_legal_transition(NodeKind parent, NodeKind child);
bool is_legal_chain(const std::vector<NodeKind>& chain);

/// Language of the content embedded in a node, if any.
enum class Language { None, Html, JavaScript, CssDeclarations, CssStylesheet, Uri };

struct SyntaxNode {
  NodeKind kind = NodeKind::HtmlOther;
  /// Present iff kind == Uri.
  std::optional<UriPosition> position;
  /// Element, attribute, property or scheme name.
  std::string detail;
  /// Raw (undecoded) text of the node, still holding placeholders.
  Bytes content;
  Language embeds = Language::None;
};

struct BrowserContext {
  std::vector<SyntaxNode> chain;
  std::string placeholder;
  /// Byte offset of the placeholder in the top-level body.
  std::size_t offset = 0;

  std::vector<NodeKind> kinds() const;
  /// e.g. "HtmlAttrDoubleQuoted > JsStringSingle"
  std::string signature() const;
};

inline constexpr std::size_t kMaxDepth = 8;

/// The decoding a browser applies to a node's content before handing it to
/// the embedded language: entity decoding for attribute values, URL decoding
/// for URIs, CSS decoding for CSS strings, identity otherwise.
Bytes decode_node(NodeKind kind, BytesView content);

struct Descent {
  Language language = Language::None;
  Bytes content;
};

/// Decoded embedded content of a node, or nullopt for leaves.
std::optional<Descent> decode_and_descend(const SyntaxNode& node);

/// Top-level HTML tokenization with error recovery. Segments are disjoint
/// and in document order; markup punctuation belongs to no segment.
struct HtmlSegment {
  std::size_t begin = 0;
  std::size_t end = 0;
  NodeKind kind = NodeKind::HtmlText;
  std::string element;
  std::string attribute;
  Language embeds = Language::None;
};
std::vector<HtmlSegment> parse_html(BytesView body);

/// One context per placeholder occurrence, in body order.
std::vector<BrowserContext> compute_contexts(BytesView body, const std::vector<std::string>& placeholders);

}  // namespace graybox::context
