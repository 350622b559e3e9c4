#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/mysql/proxy_state.hpp"

namespace graybox::scan {

/// How fetch events are aggregated into one response injection, finest
/// first.
enum class Granularity { IndividualFetch, TableColumn, Table, All };

std::string_view to_string(Granularity g);
/// Accepts individual, table-column, table, all.
std::optional<Granularity> parse_granularity(std::string_view text);

/// Fields not used by the granularity are absent. A present `table` may
/// itself be nullopt for derived columns, hence the nesting.
struct GroupKey {
  std::optional<std::optional<std::string>> table;
  std::optional<std::string> column;
  std::optional<Bytes> value;

  bool operator==(const GroupKey&) const = default;
  /// e.g. "table=sessions,column=topic", or "all".
  std::string locator() const;
};

struct FetchGroup {
  GroupKey key;
  /// Distinct fetched values, in first-seen order.
  std::vector<Bytes> values;
};

/// Groups in order of first appearance.
std::vector<FetchGroup> group_fetches(const std::vector<mysql::FetchEvent>& events, Granularity g);

/// The single injection spec that selects a group.
mysql::InjectionSpec spec_for_group(const GroupKey& key, Bytes payload);

}  // namespace graybox::scan
