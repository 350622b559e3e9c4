#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace graybox::payload {

/// Context-switching characters, in the order they appear in every payload.
inline constexpr std::array<char, 7> kSpecials = {'<', '"', '\'', '&', ':', '\\', '/'};
inline constexpr std::array<std::size_t, 8> kRunLengths = {6, 2, 2, 2, 2, 2, 2, 4};

/// L1 < L2 " L3 ' L4 & L5 : L6 \ L7 / L8, letters lowercase ASCII.
struct Payload {
  std::string text;
  std::array<std::string, 8> letter_groups;
  std::string id;
};

/// Builds a payload from explicit letter runs. Throws std::invalid_argument
/// if the runs violate the payload shape.
Payload make_payload(const std::array<std::string, 8>& runs);

/// abcdef<gh"ij'kl&mn:op\qr/stuv
Payload canonical_payload();

/// Deterministic for a fixed seed.
Payload generate_payload(std::uint64_t seed);

bool is_well_formed(const Payload& p);

}  // namespace graybox::payload
