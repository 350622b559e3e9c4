#include "graybox/mysql/proxy_state.hpp"

namespace graybox::mysql {

std::string_view to_string(ProxyMode mode) {
  switch (mode) {
    case ProxyMode::Passthrough:
      return "passthrough";
    case ProxyMode::Recording:
      return "recording";
    case ProxyMode::Injecting:
      return "injecting";
  }
  return "passthrough";
}

std::optional<ProxyMode> parse_proxy_mode(std::string_view text) {
  if (text == "passthrough") return ProxyMode::Passthrough;
  if (text == "recording") return ProxyMode::Recording;
  if (text == "injecting") return ProxyMode::Injecting;
  return std::nullopt;
}

bool InjectionSpec::matches(const std::optional<std::string>& event_table, std::string_view event_column,
                            BytesView event_value) const {
  if (table && (!event_table || *table != *event_table)) return false;
  if (column && *column != event_column) return false;
  if (value && *value != event_value) return false;
  return true;
}

const InjectionSpec* find_matching_spec(const std::vector<InjectionSpec>& specs,
                                        const std::optional<std::string>& table, std::string_view column,
                                        BytesView value) {
  for (const auto& spec : specs) {
    if (spec.matches(table, column, value)) return &spec;
  }
  return nullptr;
}

ProxyState::ProxyState() : specs_(std::make_shared<const std::vector<InjectionSpec>>()) {}

void ProxyState::set_mode(ProxyMode mode) {
  std::lock_guard lock(mutex_);
  mode_ = mode;
}

ProxyMode ProxyState::mode() const {
  std::lock_guard lock(mutex_);
  return mode_;
}

void ProxyState::set_specs(std::vector<InjectionSpec> specs) {
  auto shared = std::make_shared<const std::vector<InjectionSpec>>(std::move(specs));
  std::lock_guard lock(mutex_);
  specs_ = std::move(shared);
}

void ProxyState::clear() {
  std::lock_guard lock(mutex_);
  events_.clear();
  next_ordinal_ = 0;
  specs_ = std::make_shared<const std::vector<InjectionSpec>>();
}

ProxySnapshot ProxyState::snapshot() const {
  std::lock_guard lock(mutex_);
  return ProxySnapshot{mode_, specs_};
}

void ProxyState::record(std::optional<std::string> table, std::string column, Bytes value) {
  std::lock_guard lock(mutex_);
  events_.push_back(FetchEvent{std::move(table), std::move(column), std::move(value), next_ordinal_++});
}

std::vector<FetchEvent> ProxyState::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

void ProxyState::count_binary_command() {
  std::lock_guard lock(mutex_);
  ++diagnostics_.binary_protocol_commands;
}

void ProxyState::count_malformed() {
  std::lock_guard lock(mutex_);
  ++diagnostics_.malformed_packets;
}

void ProxyState::count_oversize_skip() {
  std::lock_guard lock(mutex_);
  ++diagnostics_.oversize_rewrites_skipped;
}

void ProxyState::count_injected() {
  std::lock_guard lock(mutex_);
  ++diagnostics_.cells_injected;
}

void ProxyState::count_multi_result() {
  std::lock_guard lock(mutex_);
  ++diagnostics_.multi_result_sets;
}

ProxyDiagnostics ProxyState::diagnostics() const {
  std::lock_guard lock(mutex_);
  return diagnostics_;
}

}  // namespace graybox::mysql
