#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace graybox {

/// Opaque byte string. Cell values, response bodies and payload echoes are
/// carried as raw bytes; std::string is used as the container because every
/// consumer (regex, JSON, HTTP) already speaks it.
using Bytes = std::string;
using BytesView = std::string_view;

std::string base64_encode(BytesView data);
std::optional<Bytes> base64_decode(std::string_view text);

bool is_valid_utf8(BytesView data);

/// Stores `data` under `key` as a JSON string when it is valid UTF-8, and
/// under `key + "_b64"` otherwise.
void put_bytes(nlohmann::json& obj, const std::string& key, BytesView data);

/// Reads a field written by put_bytes. Absent or null yields nullopt.
std::optional<Bytes> get_bytes(const nlohmann::json& obj, const std::string& key);

inline bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alnum(unsigned char c) { return is_ascii_alpha(c) || is_ascii_digit(c); }
inline bool is_hex_digit(unsigned char c) {
  return is_ascii_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
inline int hex_value(unsigned char c) {
  if (is_ascii_digit(c)) return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string to_lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);

/// Appends the UTF-8 encoding of a code point; invalid code points become U+FFFD.
void append_utf8(Bytes& out, std::uint32_t cp);

/// host:port pair. An empty host in ":3307" means all interfaces when
/// listening and loopback when connecting.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const;
  std::string connect_host() const { return host.empty() ? "127.0.0.1" : host; }
  std::string listen_host() const { return host.empty() ? "0.0.0.0" : host; }
};

/// Parses "host:port", ":port" or "[v6]:port". Throws std::invalid_argument.
Endpoint parse_endpoint(std::string_view text);

}  // namespace graybox
