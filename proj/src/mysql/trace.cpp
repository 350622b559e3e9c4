#include "graybox/mysql/trace.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "graybox/mysql/relay.hpp"

namespace graybox::mysql {

std::string serialize_trace(const Trace& trace, std::string_view comment) {
  std::string out;
  if (!comment.empty()) {
    std::istringstream lines{std::string(comment)};
    for (std::string line; std::getline(lines, line);) out += "# " + line + "\n";
  }
  for (const auto& c : trace) {
    nlohmann::json j{{"dir", c.dir == Direction::ClientToServer ? "c2s" : "s2c"}, {"data_b64", base64_encode(c.data)}};
    out += j.dump() + "\n";
  }
  return out;
}

Trace parse_trace(std::string_view text) {
  Trace out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto dir = j.at("dir").get<std::string>();
      if (dir != "c2s" && dir != "s2c") throw std::invalid_argument("bad direction " + dir);
      auto data = base64_decode(j.at("data_b64").get<std::string>());
      if (!data) throw std::invalid_argument("bad base64");
      out.push_back({dir == "c2s" ? Direction::ClientToServer : Direction::ServerToClient, std::move(*data)});
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("trace line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open trace " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_trace(text.str());
}

Bytes stream_of(const Trace& trace, Direction dir) {
  Bytes out;
  for (const auto& c : trace) {
    if (c.dir == dir) out += c.data;
  }
  return out;
}

ReplayOutput replay_trace(const Trace& trace, ProxyState& state) {
  RelaySession session(state);
  ReplayOutput out;
  for (const auto& c : trace) {
    if (c.dir == Direction::ClientToServer) {
      out.to_server += session.from_client(c.data);
    } else {
      out.to_client += session.from_server(c.data);
    }
  }
  return out;
}

TraceTap::TraceTap(Endpoint listen, Endpoint upstream)
    : upstream_(std::move(upstream)), server_(std::move(listen), [this](net::Socket& s) { serve(s); }) {}

TraceTap::~TraceTap() { stop(); }

void TraceTap::start() { server_.start(); }
void TraceTap::stop() { server_.stop(); }

std::vector<Trace> TraceTap::traces() const {
  std::lock_guard lock(mutex_);
  return traces_;
}

void TraceTap::serve(net::Socket& client) {
  net::Socket upstream;
  try {
    upstream = net::Socket::connect(upstream_);
  } catch (const net::NetError&) {
    return;
  }
  std::mutex trace_mutex;
  Trace trace;
  auto pump = [&](net::Socket& from, net::Socket& to, Direction dir) {
    char buf[64 * 1024];
    try {
      for (;;) {
        const auto n = from.read_some(buf, sizeof buf);
        if (n == 0) break;
        {
          // Record before forwarding so the peer's reply cannot be logged first.
          std::lock_guard lock(trace_mutex);
          trace.push_back({dir, Bytes(buf, n)});
        }
        to.write_all(BytesView(buf, n));
      }
    } catch (const net::NetError&) {
    }
    to.shutdown();
    from.shutdown();
  };
  std::thread back([&] { pump(upstream, client, Direction::ServerToClient); });
  pump(client, upstream, Direction::ClientToServer);
  back.join();
  std::lock_guard lock(mutex_);
  traces_.push_back(std::move(trace));
}

}  // namespace graybox::mysql
