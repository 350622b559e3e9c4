#pragma once

// Identification patterns: each letter becomes a two-way case alternation,
// each other character a bounded any-byte gap. The pattern text uses regex
// syntax, but matching is done by a dedicated interpreter that gives
// leftmost-longest semantics and lets gaps cross newlines.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/payload/payload.hpp"

namespace graybox::payload {

inline constexpr std::size_t kMaxGap = 20;
inline constexpr std::size_t kProbePrefix = 20;
inline constexpr std::size_t kProbeMinAlnum = 4;

struct IdentificationPattern {
  std::string pattern;
  std::string source_payload;
};

IdentificationPattern derive_pattern(const Payload& p);

/// Pattern over the first 20 bytes of a fetched value, or nullopt when the
/// prefix holds fewer than 4 ASCII alphanumerics.
std::optional<IdentificationPattern> prefix_probe(BytesView value);

/// Compiled form of a pattern.
class Matcher {
 public:
  /// Throws std::invalid_argument on text that is not a derived pattern.
  explicit Matcher(std::string_view pattern);

  /// Leftmost-longest match at or after `from`, as [start, end).
  std::optional<std::pair<std::size_t, std::size_t>> search(BytesView body, std::size_t from = 0) const;
  bool found_in(BytesView body) const { return search(body).has_value(); }
  /// Upper bound on the length of any match.
  std::size_t max_length() const;

 private:
  struct Element {
    bool gap = false;
    char lower = 0;
    char upper = 0;
    std::size_t max = 0;
  };
  std::optional<std::size_t> longest_from(BytesView body, std::size_t start) const;

  std::vector<Element> elements_;
};

struct PayloadMatch {
  std::size_t start = 0;
  std::size_t end = 0;
  Bytes matched_bytes;
  std::string placeholder;
  std::string payload_id;
};

/// Fresh lowercase placeholders: a fixed prefix plus a fixed-width base-26
/// counter, skipping any token already present in the body.
class PlaceholderAllocator {
 public:
  explicit PlaceholderAllocator(std::string prefix = "zqx", std::size_t width = 6);
  std::string next(BytesView body);

 private:
  std::string prefix_;
  std::size_t width_;
  std::uint64_t counter_ = 0;
};

/// Non-overlapping matches of all patterns, sorted by start. Within one
/// pattern matching is leftmost-longest; across patterns the earlier start
/// wins and ties go to the longer match.
std::vector<PayloadMatch> find_matches(BytesView body, const std::vector<IdentificationPattern>& patterns,
                                       PlaceholderAllocator& placeholders);

class OverlapError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Splices placeholders in place of matches. Matches must be sorted and
/// disjoint; otherwise OverlapError.
Bytes substitute_placeholders(BytesView body, const std::vector<PayloadMatch>& matches);

}  // namespace graybox::payload
