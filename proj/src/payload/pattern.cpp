#include "graybox/payload/pattern.hpp"

#include <algorithm>

namespace graybox::payload {

namespace {

std::string gap_term() { return ".{0," + std::to_string(kMaxGap) + "}"; }

std::string letter_term(char c) {
  const char lower = ascii_lower(c);
  const char upper = static_cast<char>(lower - 'a' + 'A');
  return std::string("(") + lower + "|" + upper + ")";
}

}  // namespace

IdentificationPattern derive_pattern(const Payload& p) {
  if (!is_well_formed(p)) throw std::invalid_argument("payload does not have the required shape");
  IdentificationPattern out;
  out.source_payload = p.id;
  for (const char c : p.text) out.pattern += is_ascii_alpha(static_cast<unsigned char>(c)) ? letter_term(c) : gap_term();
  return out;
}

std::optional<IdentificationPattern> prefix_probe(BytesView value) {
  auto prefix = value.substr(0, kProbePrefix);
  const auto alnum = std::count_if(prefix.begin(), prefix.end(),
                                   [](char c) { return is_ascii_alnum(static_cast<unsigned char>(c)); });
  if (static_cast<std::size_t>(alnum) < kProbeMinAlnum) return std::nullopt;
  // Leading and trailing gaps can always match empty, so they are dropped.
  while (!is_ascii_alnum(static_cast<unsigned char>(prefix.front()))) prefix.remove_prefix(1);
  while (!is_ascii_alnum(static_cast<unsigned char>(prefix.back()))) prefix.remove_suffix(1);
  IdentificationPattern out;
  out.source_payload = std::string(prefix);
  for (const char c : prefix) {
    const auto u = static_cast<unsigned char>(c);
    if (is_ascii_alpha(u)) {
      out.pattern += letter_term(c);
    } else if (is_ascii_digit(u)) {
      out.pattern.push_back(c);
    } else {
      out.pattern += gap_term();
    }
  }
  return out;
}

Matcher::Matcher(std::string_view pattern) {
  std::size_t i = 0;
  auto bad = [&] { throw std::invalid_argument("unsupported pattern text at offset " + std::to_string(i)); };
  while (i < pattern.size()) {
    const char c = pattern[i];
    if (c == '(') {
      if (i + 4 >= pattern.size() || pattern[i + 2] != '|' || pattern[i + 4] != ')') bad();
      elements_.push_back({false, pattern[i + 1], pattern[i + 3], 0});
      i += 5;
    } else if (c == '.') {
      if (pattern.substr(i, 4) != ".{0,") bad();
      const auto close = pattern.find('}', i);
      if (close == std::string_view::npos) bad();
      std::size_t max = 0;
      for (std::size_t j = i + 4; j < close; ++j) {
        if (!is_ascii_digit(static_cast<unsigned char>(pattern[j]))) bad();
        max = max * 10 + static_cast<std::size_t>(pattern[j] - '0');
      }
      elements_.push_back({true, 0, 0, max});
      i = close + 1;
    } else if (c == ' ' || c == '\n' || c == '\t' || c == '\r') {
      ++i;
    } else if (is_ascii_alnum(static_cast<unsigned char>(c))) {
      elements_.push_back({false, c, c, 0});
      ++i;
    } else {
      bad();
    }
  }
  if (elements_.empty()) throw std::invalid_argument("empty pattern");
}

std::size_t Matcher::max_length() const {
  std::size_t total = 0;
  for (const auto& e : elements_) total += e.gap ? e.max : 1;
  return total;
}

std::optional<std::size_t> Matcher::longest_from(BytesView body, std::size_t start) const {
  const std::size_t limit = std::min(max_length(), body.size() - start);
  std::vector<char> cur(limit + 1, 0);
  std::vector<char> next(limit + 1, 0);
  cur[0] = 1;
  for (const auto& e : elements_) {
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    if (e.gap) {
      // Sliding window: offset k is reachable if some p in [k - max, k] is.
      std::size_t last = 0;
      bool seen = false;
      for (std::size_t k = 0; k <= limit; ++k) {
        if (cur[k]) {
          last = k;
          seen = true;
        }
        if (seen && k - last <= e.max) {
          next[k] = 1;
          any = true;
        }
      }
    } else {
      for (std::size_t k = 0; k < limit; ++k) {
        if (!cur[k]) continue;
        const char b = body[start + k];
        if (b == e.lower || b == e.upper) {
          next[k + 1] = 1;
          any = true;
        }
      }
    }
    if (!any) return std::nullopt;
    cur.swap(next);
  }
  for (std::size_t k = limit + 1; k-- > 0;) {
    if (cur[k]) return k;
  }
  return std::nullopt;
}

std::optional<std::pair<std::size_t, std::size_t>> Matcher::search(BytesView body, std::size_t from) const {
  const auto& first = elements_.front();
  for (std::size_t s = from; s < body.size(); ++s) {
    if (!first.gap && body[s] != first.lower && body[s] != first.upper) continue;
    if (const auto len = longest_from(body, s)) return std::make_pair(s, s + *len);
  }
  return std::nullopt;
}

PlaceholderAllocator::PlaceholderAllocator(std::string prefix, std::size_t width)
    : prefix_(std::move(prefix)), width_(width) {}

std::string PlaceholderAllocator::next(BytesView body) {
  for (;;) {
    std::string token = prefix_;
    std::string digits(width_, 'a');
    auto n = counter_++;
    for (std::size_t i = width_; i-- > 0 && n > 0;) {
      digits[i] = static_cast<char>('a' + n % 26);
      n /= 26;
    }
    token += digits;
    if (body.find(token) == BytesView::npos) return token;
  }
}

std::vector<PayloadMatch> find_matches(BytesView body, const std::vector<IdentificationPattern>& patterns,
                                       PlaceholderAllocator& placeholders) {
  std::vector<PayloadMatch> candidates;
  for (const auto& pattern : patterns) {
    const Matcher matcher(pattern.pattern);
    std::size_t from = 0;
    while (auto m = matcher.search(body, from)) {
      candidates.push_back({m->first, m->second, {}, {}, pattern.source_payload});
      from = std::max(m->second, m->first + 1);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const PayloadMatch& a, const PayloadMatch& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end - a.start > b.end - b.start;
  });
  std::vector<PayloadMatch> out;
  std::size_t covered = 0;
  for (auto& m : candidates) {
    if (!out.empty() && m.start < covered) continue;
    m.matched_bytes = Bytes(body.substr(m.start, m.end - m.start));
    covered = m.end;
    out.push_back(std::move(m));
  }
  for (auto& m : out) m.placeholder = placeholders.next(body);
  return out;
}

Bytes substitute_placeholders(BytesView body, const std::vector<PayloadMatch>& matches) {
  Bytes out;
  std::size_t pos = 0;
  for (const auto& m : matches) {
    if (m.start < pos || m.end < m.start || m.end > body.size()) {
      throw OverlapError("placeholder matches overlap or are out of order");
    }
    out.append(body.substr(pos, m.start - pos));
    out.append(m.placeholder);
    pos = m.end;
  }
  out.append(body.substr(pos));
  return out;
}

}  // namespace graybox::payload
