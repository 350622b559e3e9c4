#pragma once

#include <string>
#include <string_view>

namespace graybox::fixture {

/// PHP htmlentities quote handling flags, restricted to ASCII input.
enum class QuoteMode { NoQuotes, Compat, Quotes };

std::string html_entities(std::string_view in, QuoteMode mode);
/// PHP addslashes: backslash before ' " \ and NUL.
std::string addslashes(std::string_view in);
/// Backslash before quotes only; backslashes pass through.
std::string escape_quotes_only(std::string_view in);
/// RFC 3986 percent-encoding of everything except unreserved characters.
std::string rawurlencode(std::string_view in);
/// Every ASCII byte outside [A-Za-z0-9 ,._] becomes \xHH.
std::string js_hex_escape(std::string_view in);
/// Every ASCII byte outside [A-Za-z0-9] becomes \HH followed by a space.
std::string css_hex_escape(std::string_view in);
/// Drops '<' and '>'.
std::string strip_angles(std::string_view in);

}  // namespace graybox::fixture
