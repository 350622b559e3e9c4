#pragma once

// Browser-side decoders applied when descending from one syntax node into
// its embedded content, plus the escape-stripping scans used by the string
// escape conditions. Malformed sequences pass through unchanged.

#include "graybox/bytes.hpp"

namespace graybox::context {

/// Named (with a table of common names and legacy semicolon-less forms),
/// decimal and hexadecimal character references.
Bytes html_entity_decode(BytesView in);

/// %HH sequences; '+' is left alone as browsers do for URIs.
Bytes url_decode(BytesView in);

/// CSS string escapes: backslash + 1-6 hex digits + optional whitespace,
/// backslash + newline (removed), backslash + other character.
Bytes css_decode(BytesView in);

/// Removes recognized JavaScript string-literal escape sequences: the single
/// character escapes, \/ (as emitted by JSON encoders), octal digits, \xHH,
/// \uHHHH, \u{...} and line continuations. A backslash that does not start
/// one is kept.
Bytes strip_js_escapes(BytesView in);

/// Removes CSS escape sequences. A trailing lone backslash is kept.
Bytes strip_css_escapes(BytesView in);

}  // namespace graybox::context
