#pragma once

// Sanitization verification: replays browser decoding of an encoded echo
// from the outermost syntax node inwards and checks each node's escape
// condition.

#include <optional>
#include <string_view>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/context/context.hpp"

namespace graybox::verify {

using context::NodeKind;
using context::UriPosition;

enum class Outcome {
  CorrectSanitization,
  FlawArbitraryJs,
  FlawPossiblyArbitraryJs,
  FlawNoJsExecution,
  FlawManualAnalysis,
};

inline constexpr Outcome kFlawOutcomes[] = {Outcome::FlawArbitraryJs, Outcome::FlawPossiblyArbitraryJs,
                                            Outcome::FlawNoJsExecution, Outcome::FlawManualAnalysis};

std::string_view to_string(Outcome outcome);
/// Report heading, e.g. "permits arbitrary JavaScript execution".
std::string_view severity_phrase(Outcome outcome);

/// Kinds that carry an escape condition; everything else goes to manual
/// analysis.
bool has_escape_condition(NodeKind kind);

/// Throws std::logic_error for kinds without an escape condition.
bool escape_condition(NodeKind kind, BytesView value, std::optional<UriPosition> position);

/// Outcome for a node whose escape condition fired on `value`.
Outcome classify_severity(NodeKind kind, std::optional<UriPosition> position, BytesView value);

struct VerifyStep {
  std::size_t node = 0;
  /// Working value when the node was checked.
  Bytes value;
  bool escaped = false;
  /// The node's full text with the placeholder restored to `value`, and the
  /// same text after the node's decoding.
  Bytes node_text;
  Bytes node_text_decoded;
};

struct Verdict {
  Outcome outcome = Outcome::CorrectSanitization;
  std::optional<std::size_t> failing_node;
  /// Working value at the failing node.
  Bytes evidence;
  std::vector<VerifyStep> trace;
};

Verdict verify(BytesView matched_bytes, const context::BrowserContext& ctx);

}  // namespace graybox::verify
