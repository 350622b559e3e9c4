#include "graybox/payload/payload.hpp"

#include <random>
#include <stdexcept>

namespace graybox::payload {

namespace {

bool valid_run(const std::string& run, std::size_t min_length) {
  if (run.size() < min_length) return false;
  for (std::size_t i = 0; i < run.size(); ++i) {
    if (run[i] < 'a' || run[i] > 'z') return false;
    if (i > 0 && run[i] == run[i - 1]) return false;
  }
  return true;
}

bool valid_runs(const std::array<std::string, 8>& runs) {
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const bool edge = i == 0 || i + 1 == runs.size();
    if (!valid_run(runs[i], edge ? 4 : 2)) return false;
    if (!edge && runs[i].size() != 2) return false;
  }
  return true;
}

}  // namespace

Payload make_payload(const std::array<std::string, 8>& runs) {
  if (!valid_runs(runs)) throw std::invalid_argument("letter runs do not fit the payload shape");
  Payload p;
  p.letter_groups = runs;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    p.text += runs[i];
    p.id += runs[i];
    if (i < kSpecials.size()) p.text.push_back(kSpecials[i]);
  }
  return p;
}

Payload canonical_payload() { return make_payload({"abcdef", "gh", "ij", "kl", "mn", "op", "qr", "stuv"}); }

Payload generate_payload(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> letter(0, 25);
  std::array<std::string, 8> runs;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    while (runs[i].size() < kRunLengths[i]) {
      const char c = static_cast<char>('a' + letter(rng));
      if (!runs[i].empty() && runs[i].back() == c) continue;
      runs[i].push_back(c);
    }
  }
  return make_payload(runs);
}

bool is_well_formed(const Payload& p) {
  if (!valid_runs(p.letter_groups)) return false;
  try {
    const auto rebuilt = make_payload(p.letter_groups);
    return rebuilt.text == p.text && rebuilt.id == p.id;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace graybox::payload
