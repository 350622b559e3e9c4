#include "graybox/scan/report.hpp"

#include <sstream>

namespace graybox::scan {

std::string Finding::chain_signature() const {
  std::string out;
  for (const auto& n : chain) {
    if (!out.empty()) out += " > ";
    out += n.kind + "(" + n.detail;
    if (n.position) out += "," + *n.position;
    out += ")";
  }
  return out;
}

std::string Finding::key() const {
  std::string source = point.kind == PointKind::DbFetchGroup
                           ? "db"
                           : "http:" + std::string(to_string(point.kind)) + ":" + point.locator;
  return request_id + "|" + source + "|" + chain_signature() + "|" + std::string(verify::to_string(outcome));
}

std::uint64_t Tallies::incorrect_total() const {
  std::uint64_t total = 0;
  for (const auto& [_, n] : incorrect) total += n;
  return total;
}

nlohmann::json finding_to_json(const Finding& f) {
  nlohmann::json j;
  j["replay"] = f.replay_index;
  j["request_id"] = f.request_id;
  j["source"] = {{"kind", to_string(f.point.kind)}, {"locator", f.point.locator}};
  j["payload_id"] = f.payload_id;
  put_bytes(j, "unencoded", f.payload_text);
  put_bytes(j, "encoded", f.matched);
  auto chain = nlohmann::json::array();
  for (const auto& n : f.chain) {
    nlohmann::json node{{"kind", n.kind}, {"detail", n.detail}};
    if (n.position) node["position"] = *n.position;
    chain.push_back(node);
  }
  j["chain"] = chain;
  j["verdict"] = verify::to_string(f.outcome);
  j["severity"] = verify::severity_phrase(f.outcome);
  j["failing_node"] = f.failing_node;
  put_bytes(j, "evidence", f.evidence);
  auto steps = nlohmann::json::array();
  for (const auto& d : f.decoded_steps) {
    nlohmann::json step = nlohmann::json::object();
    put_bytes(step, "text", d);
    steps.push_back(step);
  }
  j["decoded_steps"] = steps;
  j["status"] = f.response_status;
  return j;
}

std::string render_jsonl(const ScanReport& report) {
  std::string out;
  for (const auto& f : report.findings) out += finding_to_json(f).dump() + "\n";
  return out;
}

std::string render_text(const ScanReport& report) {
  std::ostringstream out;
  out << "Scan of " << (report.application.empty() ? "target" : report.application) << " (granularity "
      << to_string(report.granularity) << ", seed " << report.seed << ", pruning " << (report.prune ? "on" : "off")
      << ")\n";
  if (report.aborted) out << "SCAN ABORTED: " << report.abort_reason << "\n";
  out << "\n";
  out << "  Correct sanitizations:   " << report.tallies.correct << "\n";
  out << "  Incorrect sanitizations: " << report.tallies.incorrect_total() << "\n";
  for (const auto o : verify::kFlawOutcomes) {
    const auto it = report.tallies.incorrect.find(o);
    out << "    " << verify::severity_phrase(o) << ": " << (it == report.tallies.incorrect.end() ? 0 : it->second)
        << "\n";
  }
  const auto& c = report.counters;
  out << "\n  HTTP requests: " << c.http_requests << " (baseline " << c.baseline_replays << ", mutated "
      << c.mutated_replays << ", login " << c.login_requests << ")\n";
  out << "  Fetch events recorded: " << c.fetch_events << ", groups: " << c.groups_total << ", pruned: "
      << c.groups_pruned << "\n";
  out << "  5xx responses: " << c.responses_5xx << ", transport errors: " << c.transport_errors << "\n";
  out << "  Analysis time: " << static_cast<long long>(c.wall_time_ms) << " ms\n";

  for (const auto o : verify::kFlawOutcomes) {
    bool heading = false;
    for (const auto& f : report.findings) {
      if (f.outcome != o) continue;
      if (!heading) {
        out << "\n== " << verify::severity_phrase(o) << " ==\n";
        heading = true;
      }
      out << "- " << f.request_id << " via " << to_string(f.point.kind) << " " << f.point.locator << " (HTTP "
          << f.response_status << ")\n";
      out << "    context:   " << f.chain_signature() << "\n";
      out << "    unencoded: " << f.payload_text << "\n";
      out << "    encoded:   " << f.matched << "\n";
    }
  }
  return out.str();
}

nlohmann::json summary_json(const ScanReport& report) {
  nlohmann::json j;
  j["application"] = report.application;
  j["granularity"] = to_string(report.granularity);
  j["seed"] = report.seed;
  j["prune"] = report.prune;
  j["aborted"] = report.aborted;
  if (report.aborted) j["abort_reason"] = report.abort_reason;
  j["correct_sanitizations"] = report.tallies.correct;
  j["incorrect_sanitizations"] = report.tallies.incorrect_total();
  nlohmann::json by_severity = nlohmann::json::object();
  for (const auto o : verify::kFlawOutcomes) {
    const auto it = report.tallies.incorrect.find(o);
    by_severity[std::string(verify::to_string(o))] = it == report.tallies.incorrect.end() ? 0 : it->second;
  }
  j["incorrect_by_severity"] = by_severity;
  const auto& c = report.counters;
  j["counters"] = {
      {"http_requests", c.http_requests},       {"baseline_replays", c.baseline_replays},
      {"mutated_replays", c.mutated_replays},   {"login_requests", c.login_requests},
      {"fetch_events", c.fetch_events},         {"groups_total", c.groups_total},
      {"groups_pruned", c.groups_pruned},       {"responses_5xx", c.responses_5xx},
      {"transport_errors", c.transport_errors}, {"reauthentications", c.reauthentications},
      {"skipped_points", c.skipped_points},     {"skipped_templates", c.skipped_templates},
      {"wall_time_ms", c.wall_time_ms},
  };
  j["findings"] = report.findings.size();
  return j;
}

std::set<std::string> finding_keys(const ScanReport& report) {
  std::set<std::string> keys;
  for (const auto& f : report.findings) keys.insert(f.key());
  return keys;
}

}  // namespace graybox::scan
