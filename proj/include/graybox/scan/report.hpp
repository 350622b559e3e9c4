#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "graybox/bytes.hpp"
#include "graybox/scan/grouping.hpp"
#include "graybox/scan/request.hpp"
#include "graybox/verify/verifier.hpp"

namespace graybox::scan {

struct ChainNode {
  std::string kind;
  std::string detail;
  std::optional<std::string> position;

  bool operator==(const ChainNode&) const = default;
};

struct Finding {
  std::size_t replay_index = 0;
  std::string request_id;
  InjectionPoint point;
  std::string payload_id;
  /// Unencoded payload next to its encoded echo, as analysts compare them.
  Bytes payload_text;
  Bytes matched;
  std::vector<ChainNode> chain;
  verify::Outcome outcome = verify::Outcome::FlawManualAnalysis;
  std::size_t failing_node = 0;
  Bytes evidence;
  /// Text of each passed node after its decoding step, outermost first.
  std::vector<Bytes> decoded_steps;
  int response_status = 0;

  /// "HtmlAttrDoubleQuoted(onclick) > JsStringSingle(string literal)"
  std::string chain_signature() const;
  /// Identity used to compare scans: request, source class, chain, outcome.
  /// Database sources compare as one class regardless of grouping.
  std::string key() const;
};

struct Tallies {
  std::uint64_t correct = 0;
  std::map<verify::Outcome, std::uint64_t> incorrect;

  std::uint64_t incorrect_total() const;
};

struct Counters {
  std::uint64_t http_requests = 0;
  std::uint64_t baseline_replays = 0;
  std::uint64_t mutated_replays = 0;
  std::uint64_t login_requests = 0;
  std::uint64_t fetch_events = 0;
  std::uint64_t groups_total = 0;
  std::uint64_t groups_pruned = 0;
  std::uint64_t responses_5xx = 0;
  std::uint64_t transport_errors = 0;
  std::uint64_t reauthentications = 0;
  std::uint64_t skipped_points = 0;
  std::uint64_t skipped_templates = 0;
  double wall_time_ms = 0;
};

struct ScanReport {
  std::string application;
  Granularity granularity = Granularity::TableColumn;
  std::uint64_t seed = 0;
  bool prune = true;
  Tallies tallies;
  std::vector<Finding> findings;
  Counters counters;
  bool aborted = false;
  std::string abort_reason;
};

nlohmann::json finding_to_json(const Finding& f);

/// One finding per line, deterministic for a given report.
std::string render_jsonl(const ScanReport& report);
/// Human summary grouped by severity.
std::string render_text(const ScanReport& report);
/// Tallies, counters and configuration (includes wall time).
nlohmann::json summary_json(const ScanReport& report);

std::set<std::string> finding_keys(const ScanReport& report);

}  // namespace graybox::scan
