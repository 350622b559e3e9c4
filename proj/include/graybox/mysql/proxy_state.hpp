#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graybox/bytes.hpp"

namespace graybox::mysql {

enum class ProxyMode { Passthrough, Recording, Injecting };

std::string_view to_string(ProxyMode mode);
std::optional<ProxyMode> parse_proxy_mode(std::string_view text);

/// One string-typed cell observed crossing the wire.
struct FetchEvent {
  std::optional<std::string> table;
  std::string column;
  Bytes value;
  std::uint64_t ordinal = 0;

  bool operator==(const FetchEvent&) const = default;
};

/// Predicate over fetch events plus the replacement payload. Absent fields
/// match anything.
struct InjectionSpec {
  std::optional<std::string> table;
  std::optional<std::string> column;
  std::optional<Bytes> value;
  Bytes payload;

  bool matches(const std::optional<std::string>& event_table, std::string_view event_column,
               BytesView event_value) const;
};

/// First matching spec in list order, or nullptr.
const InjectionSpec* find_matching_spec(const std::vector<InjectionSpec>& specs,
                                        const std::optional<std::string>& table, std::string_view column,
                                        BytesView value);

/// Mode and specs as seen by one result set from its first packet to its last.
struct ProxySnapshot {
  ProxyMode mode = ProxyMode::Passthrough;
  std::shared_ptr<const std::vector<InjectionSpec>> specs;
};

struct ProxyDiagnostics {
  std::uint64_t binary_protocol_commands = 0;
  std::uint64_t malformed_packets = 0;
  std::uint64_t oversize_rewrites_skipped = 0;
  std::uint64_t cells_injected = 0;
  std::uint64_t multi_result_sets = 0;
};

/// State shared by every relay session and the control plane. All mutation
/// goes through one mutex so observers see a totally ordered event log.
class ProxyState {
 public:
  ProxyState();

  void set_mode(ProxyMode mode);
  ProxyMode mode() const;

  void set_specs(std::vector<InjectionSpec> specs);

  /// Empties the recording window, resets ordinals and drops installed specs.
  void clear();

  ProxySnapshot snapshot() const;

  /// Appends an event with the next ordinal of the current window.
  void record(std::optional<std::string> table, std::string column, Bytes value);
  std::vector<FetchEvent> events() const;

  void count_binary_command();
  void count_malformed();
  void count_oversize_skip();
  void count_injected();
  void count_multi_result();
  ProxyDiagnostics diagnostics() const;

 private:
  mutable std::mutex mutex_;
  ProxyMode mode_ = ProxyMode::Passthrough;
  std::shared_ptr<const std::vector<InjectionSpec>> specs_;
  std::vector<FetchEvent> events_;
  std::uint64_t next_ordinal_ = 0;
  ProxyDiagnostics diagnostics_;
};

}  // namespace graybox::mysql
