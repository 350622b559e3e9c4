#pragma once

// Side-channel control protocol: newline-delimited JSON over TCP.
//
//   {"cmd":"set_mode","mode":"passthrough|recording|injecting"}
//   {"cmd":"clear"}
//   {"cmd":"set_specs","specs":[{"table":?,"column":?,"value":?,"payload":...}]}
//   {"cmd":"get_events"}   -> {"ok":true,"events":[{"table":?,"column":..,"value":..,"ordinal":..}]}
//   {"cmd":"get_diagnostics"}
//
// Every reply carries "ok". Byte-valued fields ("value", "payload") are plain
// strings when they are valid UTF-8 and "<field>_b64" base64 otherwise. When
// the proxy runs with a token, each message must carry a matching "token".

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "graybox/bytes.hpp"
#include "graybox/mysql/proxy_state.hpp"

namespace graybox::mysql {

/// Name of the environment variable holding the optional control token.
inline constexpr const char* kControlTokenEnv = "GRAYBOX_CONTROL_TOKEN";

nlohmann::json event_to_json(const FetchEvent& event);
FetchEvent event_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const InjectionSpec& spec);
InjectionSpec spec_from_json(const nlohmann::json& j);

/// Executes one control message against the proxy state.
class ControlHandler {
 public:
  ControlHandler(ProxyState& state, std::optional<std::string> token) : state_(state), token_(std::move(token)) {}

  nlohmann::json handle(const nlohmann::json& message);
  /// Parses one line and returns the serialized reply (without newline).
  std::string handle_line(std::string_view line);

 private:
  ProxyState& state_;
  std::optional<std::string> token_;
};

class ControlError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Synchronous client used by the scan orchestrator.
class ControlClient {
 public:
  ControlClient(Endpoint endpoint, std::optional<std::string> token, int timeout_ms = 10000);
  ~ControlClient();
  ControlClient(const ControlClient&) = delete;
  ControlClient& operator=(const ControlClient&) = delete;

  void set_mode(ProxyMode mode);
  void clear();
  void set_specs(const std::vector<InjectionSpec>& specs);
  std::vector<FetchEvent> get_events();
  nlohmann::json get_diagnostics();

  /// Sends a message and returns the reply; throws ControlError when the
  /// endpoint is unreachable or replies with ok=false.
  nlohmann::json call(nlohmann::json message);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace graybox::mysql
