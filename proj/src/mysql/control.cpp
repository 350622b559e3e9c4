#include "graybox/mysql/control.hpp"

#include "graybox/net.hpp"

namespace graybox::mysql {

using nlohmann::json;

json event_to_json(const FetchEvent& event) {
  json j;
  j["table"] = event.table ? json(*event.table) : json(nullptr);
  j["column"] = event.column;
  put_bytes(j, "value", event.value);
  j["ordinal"] = event.ordinal;
  return j;
}

FetchEvent event_from_json(const json& j) {
  FetchEvent e;
  if (j.contains("table") && !j["table"].is_null()) e.table = j["table"].get<std::string>();
  e.column = j.at("column").get<std::string>();
  e.value = get_bytes(j, "value").value_or(Bytes{});
  e.ordinal = j.at("ordinal").get<std::uint64_t>();
  return e;
}

json spec_to_json(const InjectionSpec& spec) {
  json j = json::object();
  if (spec.table) j["table"] = *spec.table;
  if (spec.column) j["column"] = *spec.column;
  if (spec.value) put_bytes(j, "value", *spec.value);
  put_bytes(j, "payload", spec.payload);
  return j;
}

InjectionSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("spec must be an object");
  InjectionSpec spec;
  if (j.contains("table") && !j["table"].is_null()) spec.table = j["table"].get<std::string>();
  if (j.contains("column") && !j["column"].is_null()) spec.column = j["column"].get<std::string>();
  spec.value = get_bytes(j, "value");
  auto payload = get_bytes(j, "payload");
  if (!payload) throw std::invalid_argument("spec is missing 'payload'");
  spec.payload = std::move(*payload);
  return spec;
}

json ControlHandler::handle(const json& message) {
  auto fail = [](const std::string& error) { return json{{"ok", false}, {"error", error}}; };
  try {
    if (!message.is_object()) return fail("message must be a JSON object");
    if (token_) {
      auto it = message.find("token");
      if (it == message.end() || !it->is_string() || it->get<std::string>() != *token_) {
        return fail("invalid or missing token");
      }
    }
    const auto cmd = message.value("cmd", std::string{});
    if (cmd == "set_mode") {
      auto mode = parse_proxy_mode(message.value("mode", std::string{}));
      if (!mode) return fail("unknown mode");
      state_.set_mode(*mode);
      return json{{"ok", true}};
    }
    if (cmd == "clear") {
      state_.clear();
      return json{{"ok", true}};
    }
    if (cmd == "set_specs") {
      const auto& list = message.at("specs");
      if (!list.is_array()) return fail("'specs' must be an array");
      std::vector<InjectionSpec> specs;
      for (const auto& item : list) specs.push_back(spec_from_json(item));
      state_.set_specs(std::move(specs));
      return json{{"ok", true}};
    }
    if (cmd == "get_events") {
      json events = json::array();
      for (const auto& e : state_.events()) events.push_back(event_to_json(e));
      return json{{"ok", true}, {"events", std::move(events)}};
    }
    if (cmd == "get_diagnostics") {
      const auto d = state_.diagnostics();
      return json{{"ok", true},
                  {"mode", to_string(state_.mode())},
                  {"binary_protocol_commands", d.binary_protocol_commands},
                  {"malformed_packets", d.malformed_packets},
                  {"oversize_rewrites_skipped", d.oversize_rewrites_skipped},
                  {"cells_injected", d.cells_injected},
                  {"multi_result_sets", d.multi_result_sets}};
    }
    return fail("unknown command '" + cmd + "'");
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

std::string ControlHandler::handle_line(std::string_view line) {
  json message;
  try {
    message = json::parse(line);
  } catch (const json::parse_error& e) {
    return json{{"ok", false}, {"error", std::string("invalid JSON: ") + e.what()}}.dump();
  }
  return handle(message).dump();
}

struct ControlClient::Impl {
  Endpoint endpoint;
  std::optional<std::string> token;
  int timeout_ms;
  net::Socket socket;
  Bytes pending;

  void ensure_connected() {
    if (socket.valid()) return;
    socket = net::Socket::connect(endpoint, timeout_ms);
    socket.set_timeout(timeout_ms);
    pending.clear();
  }
};

ControlClient::ControlClient(Endpoint endpoint, std::optional<std::string> token, int timeout_ms)
    : impl_(std::make_unique<Impl>(Impl{std::move(endpoint), std::move(token), timeout_ms, {}, {}})) {}

ControlClient::~ControlClient() = default;

json ControlClient::call(json message) {
  if (impl_->token) message["token"] = *impl_->token;
  std::optional<std::string> line;
  try {
    impl_->ensure_connected();
    impl_->socket.write_all(message.dump() + "\n");
    line = impl_->socket.read_line(impl_->pending);
  } catch (const net::NetError& e) {
    impl_->socket.close();
    throw ControlError(std::string("control channel: ") + e.what());
  }
  if (!line) {
    impl_->socket.close();
    throw ControlError("control channel closed by proxy");
  }
  json reply;
  try {
    reply = json::parse(*line);
  } catch (const json::parse_error&) {
    throw ControlError("control reply is not JSON");
  }
  if (!reply.value("ok", false)) {
    throw ControlError("proxy rejected '" + message.value("cmd", std::string{}) +
                       "': " + reply.value("error", std::string("unknown error")));
  }
  return reply;
}

void ControlClient::set_mode(ProxyMode mode) { call({{"cmd", "set_mode"}, {"mode", to_string(mode)}}); }

void ControlClient::clear() { call({{"cmd", "clear"}}); }

void ControlClient::set_specs(const std::vector<InjectionSpec>& specs) {
  json list = json::array();
  for (const auto& s : specs) list.push_back(spec_to_json(s));
  call({{"cmd", "set_specs"}, {"specs", std::move(list)}});
}

std::vector<FetchEvent> ControlClient::get_events() {
  const auto reply = call({{"cmd", "get_events"}});
  std::vector<FetchEvent> events;
  for (const auto& item : reply.at("events")) events.push_back(event_from_json(item));
  return events;
}

json ControlClient::get_diagnostics() { return call({{"cmd", "get_diagnostics"}}); }

}  // namespace graybox::mysql
