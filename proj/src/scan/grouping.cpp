#include "graybox/scan/grouping.hpp"

#include <algorithm>

namespace graybox::scan {

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::IndividualFetch: return "individual";
    case Granularity::TableColumn: return "table-column";
    case Granularity::Table: return "table";
    case Granularity::All: return "all";
  }
  return "?";
}

std::optional<Granularity> parse_granularity(std::string_view text) {
  for (const auto g : {Granularity::IndividualFetch, Granularity::TableColumn, Granularity::Table, Granularity::All}) {
    if (text == to_string(g)) return g;
  }
  return std::nullopt;
}

std::string GroupKey::locator() const {
  std::string out;
  auto add = [&](const std::string& field) {
    if (!out.empty()) out += ",";
    out += field;
  };
  if (table) add("table=" + table->value_or("(derived)"));
  if (column) add("column=" + *column);
  if (value) add("value=" + (is_valid_utf8(*value) ? *value : "base64:" + base64_encode(*value)));
  return out.empty() ? "all" : out;
}

std::vector<FetchGroup> group_fetches(const std::vector<mysql::FetchEvent>& events, Granularity g) {
  std::vector<FetchGroup> groups;
  for (const auto& e : events) {
    GroupKey key;
    if (g != Granularity::All) key.table = e.table;
    if (g == Granularity::IndividualFetch || g == Granularity::TableColumn) key.column = e.column;
    if (g == Granularity::IndividualFetch) key.value = e.value;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const FetchGroup& grp) { return grp.key == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    if (std::find(it->values.begin(), it->values.end(), e.value) == it->values.end()) it->values.push_back(e.value);
  }
  return groups;
}

mysql::InjectionSpec spec_for_group(const GroupKey& key, Bytes payload) {
  mysql::InjectionSpec spec;
  // A derived-column group (table present but nullopt) cannot be expressed
  // in the spec language; its table field is left as a wildcard.
  if (key.table) spec.table = *key.table;
  spec.column = key.column;
  spec.value = key.value;
  spec.payload = std::move(payload);
  return spec;
}

}  // namespace graybox::scan
