#include <doctest.h>

#include <filesystem>
#include <random>

#include "graybox/mysql/control.hpp"
#include "graybox/mysql/relay.hpp"
#include "graybox/mysql/trace.hpp"
#include "fixture_stack.hpp"

using namespace graybox;
using namespace graybox::mysql;

namespace {

/// A synthetic session: greeting, handshake response, OK, then one query
/// answered by a text result set built from `rows`.
struct SyntheticSession {
  bool deprecate_eof = false;
  std::vector<ColumnDefinition> columns;
  std::vector<TextRow> rows;

  Bytes greeting() const {
    Bytes g;
    g += '\x0a';
    g += "8.0.36";
    g += '\0';
    put_int(g, 1, 4);
    g += "abcdefgh";
    g += '\0';
    const std::uint32_t caps = cap::kProtocol41 | cap::kSecureConnection | cap::kPluginAuth | cap::kDeprecateEof;
    put_int(g, caps & 0xFFFF, 2);
    g += '\x2d';
    put_int(g, 2, 2);
    put_int(g, caps >> 16, 2);
    g += '\x15';
    g += Bytes(10, '\0');
    g += "ijklmnopqrst";
    g += '\0';
    g += "mysql_native_password";
    g += '\0';
    Bytes out;
    write_frame(out, g, 0);
    return out;
  }

  Bytes handshake_response() const {
    Bytes p;
    std::uint32_t caps = cap::kProtocol41 | cap::kSecureConnection | cap::kPluginAuth;
    if (deprecate_eof) caps |= cap::kDeprecateEof;
    put_int(p, caps, 4);
    put_int(p, 1 << 24, 4);
    p += '\x2d';
    p += Bytes(23, '\0');
    p += "app";
    p += '\0';
    p += '\0';
    Bytes out;
    write_frame(out, p, 1);
    return out;
  }

  static Bytes ok(std::uint8_t seq) {
    Bytes out;
    write_frame(out, Bytes("\x00\x00\x00\x02\x00\x00\x00", 7), seq);
    return out;
  }

  static Bytes query(std::string_view sql) {
    Bytes p("\x03", 1);
    p += sql;
    Bytes out;
    write_frame(out, p, 0);
    return out;
  }

  Bytes result_set() const {
    Bytes out;
    std::uint8_t seq = 1;
    Bytes count;
    put_lenenc_int(count, columns.size());
    write_frame(out, count, seq++);
    for (const auto& c : columns) write_frame(out, c.encode(), seq++);
    const Bytes eof("\xfe\x00\x00\x02\x00", 5);
    if (!deprecate_eof) write_frame(out, eof, seq++);
    for (const auto& r : rows) write_frame(out, encode_text_row(r), seq++);
    if (deprecate_eof) {
      write_frame(out, Bytes("\xfe\x00\x00\x02\x00\x00\x00", 7), seq++);
    } else {
      write_frame(out, eof, seq++);
    }
    return out;
  }

  Trace trace() const {
    return {{Direction::ServerToClient, greeting()},
            {Direction::ClientToServer, handshake_response()},
            {Direction::ServerToClient, ok(2)},
            {Direction::ClientToServer, query("SELECT 1")},
            {Direction::ServerToClient, result_set()}};
  }
};

ColumnDefinition column(std::string table, std::string name, ColumnType type) {
  ColumnDefinition c;
  c.schema = "fixture";
  c.table = table;
  c.org_table = std::move(table);
  c.name = name;
  c.org_name = std::move(name);
  c.type = static_cast<std::uint8_t>(type);
  return c;
}

SyntheticSession random_session(std::mt19937_64& rng) {
  SyntheticSession s;
  s.deprecate_eof = rng() % 2;
  const ColumnType types[] = {ColumnType::VarChar, ColumnType::VarString, ColumnType::String, ColumnType::Long,
                              ColumnType::Blob};
  const auto ncols = 1 + rng() % 5;
  for (std::size_t c = 0; c < ncols; ++c) {
    s.columns.push_back(column(rng() % 2 ? "t" : "u", "c" + std::to_string(c), types[rng() % 5]));
  }
  const auto nrows = rng() % 8;
  for (std::size_t r = 0; r < nrows; ++r) {
    TextRow row;
    for (std::size_t c = 0; c < ncols; ++c) {
      if (rng() % 4 == 0) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back("v" + std::to_string(r) + "_" + std::to_string(rng() % 3));
      }
    }
    s.rows.push_back(std::move(row));
  }
  return s;
}

std::vector<Frame> frames_of(BytesView stream) {
  FrameReader r;
  r.feed(stream);
  std::vector<Frame> out;
  while (auto f = r.next()) out.push_back(std::move(*f));
  return out;
}

std::vector<std::filesystem::path> trace_files() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(testing::data_dir() / "traces")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("passthrough replays synthetic sessions byte for byte") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_session(rng);
    ProxyState state;
    const auto trace = s.trace();
    const auto out = replay_trace(trace, state);
    CHECK(out.to_server == stream_of(trace, Direction::ClientToServer));
    CHECK(out.to_client == stream_of(trace, Direction::ServerToClient));
    CHECK(state.events().empty());
  }
}

TEST_CASE("recording sees every non-NULL string cell in row-major order") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_session(rng);
    ProxyState state;
    state.set_mode(ProxyMode::Recording);
    const auto out = replay_trace(s.trace(), state);
    CHECK(out.to_client == stream_of(s.trace(), Direction::ServerToClient));

    std::vector<FetchEvent> expected;
    for (const auto& row : s.rows) {
      for (std::size_t c = 0; c < s.columns.size(); ++c) {
        if (!is_string_family(s.columns[c].type) || !row[c]) continue;
        expected.push_back({s.columns[c].org_table, s.columns[c].name, *row[c], expected.size()});
      }
    }
    CHECK(state.events() == expected);
  }
}

TEST_CASE("injection rewrites exactly the matching cells and nothing else") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_session(rng);
    if (s.rows.empty()) continue;
    InjectionSpec spec;
    spec.table = "t";
    spec.column = "c0";
    spec.payload = Bytes(rng() % 2 ? 20 : 300, 'P');

    ProxyState state;
    state.set_mode(ProxyMode::Injecting);
    state.set_specs({spec});
    const auto trace = s.trace();
    const auto out = replay_trace(trace, state);
    CHECK(out.to_server == stream_of(trace, Direction::ClientToServer));

    const auto before = frames_of(stream_of(trace, Direction::ServerToClient));
    const auto after = frames_of(out.to_client);
    REQUIRE(before.size() == after.size());
    const auto first_row = before.size() - s.rows.size() - 1;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (i < first_row || i == before.size() - 1) {
        CHECK(before[i].payload == after[i].payload);
        continue;
      }
      const auto& row = s.rows[i - first_row];
      auto expect = row;
      for (std::size_t c = 0; c < s.columns.size(); ++c) {
        if (is_string_family(s.columns[c].type) && row[c] &&
            spec.matches(s.columns[c].org_table, s.columns[c].name, *row[c])) {
          expect[c] = spec.payload;
        }
      }
      CHECK(parse_text_row(after[i].payload, s.columns.size()) == expect);
    }
    // Sequence ids stay contiguous after re-framing; the result set starts at frame 2.
    std::uint8_t seq = after[2].first_seq;
    for (std::size_t i = 3; i < after.size(); ++i) {
      seq = static_cast<std::uint8_t>(seq + after[i - 1].physical_count);
      CHECK(after[i].first_seq == seq);
    }
  }
}

TEST_CASE("checked-in traces survive passthrough and byte-by-byte feeding") {
  for (const auto& path : trace_files()) {
    CAPTURE(path.string());
    const auto trace = read_trace(path);
    ProxyState whole;
    const auto out = replay_trace(trace, whole);

    // Same trace split into single-byte chunks must produce the same output.
    Trace split;
    for (const auto& c : trace) {
      for (char b : c.data) split.push_back({c.dir, Bytes(1, b)});
    }
    ProxyState bytewise;
    const auto out2 = replay_trace(split, bytewise);
    CHECK(out2.to_client == out.to_client);
    CHECK(out2.to_server == out.to_server);

    if (path.filename().string().find("refused") == std::string::npos) {
      CHECK(out.to_client == stream_of(trace, Direction::ServerToClient));
      CHECK(out.to_server == stream_of(trace, Direction::ClientToServer));
    } else {
      const auto greeting = frames_of(out.to_client).front().payload;
      CHECK((greeting_capabilities(greeting) & kRefusedCapabilities) == 0);
    }
  }
}

TEST_CASE("recording events match across chunkings of a real trace") {
  const auto trace = read_trace(testing::data_dir() / "traces" / "classic_eof_session.jsonl");
  ProxyState a;
  a.set_mode(ProxyMode::Recording);
  replay_trace(trace, a);
  Trace split;
  std::mt19937_64 rng(1);
  for (const auto& c : trace) {
    std::size_t pos = 0;
    while (pos < c.data.size()) {
      const auto n = std::min<std::size_t>(1 + rng() % 7, c.data.size() - pos);
      split.push_back({c.dir, c.data.substr(pos, n)});
      pos += n;
    }
  }
  ProxyState b;
  b.set_mode(ProxyMode::Recording);
  replay_trace(split, b);
  CHECK(a.events() == b.events());
  REQUIRE_FALSE(a.events().empty());
  CHECK(a.events().front().table == std::optional<std::string>("sessions"));
  CHECK(a.events().front().column == "topic");
}

TEST_CASE("clear resets ordinals and specs") {
  ProxyState s;
  s.record("t", "c", "a");
  s.record("t", "c", "b");
  s.set_specs({InjectionSpec{}});
  s.clear();
  CHECK(s.events().empty());
  s.record("t", "c", "x");
  CHECK(s.events().front().ordinal == 0);
  CHECK((!s.snapshot().specs || s.snapshot().specs->empty()));
}

TEST_CASE("spec matching treats absent fields as wildcards and takes the first match") {
  InjectionSpec any;
  any.payload = "A";
  InjectionSpec col;
  col.column = "c";
  col.payload = "B";
  CHECK(any.matches(std::nullopt, "x", "y"));
  CHECK(col.matches(std::nullopt, "c", "y"));
  CHECK_FALSE(col.matches("t", "d", "y"));
  InjectionSpec table;
  table.table = "t";
  CHECK_FALSE(table.matches(std::nullopt, "c", "v"));
  const std::vector<InjectionSpec> specs{col, any};
  CHECK(find_matching_spec(specs, "t", "c", "v")->payload == "B");
  CHECK(find_matching_spec(specs, "t", "d", "v")->payload == "A");
}

TEST_CASE("control handler round-trips events and specs and enforces the token") {
  ProxyState state;
  ControlHandler handler(state, std::string("secret"));
  auto reply = handler.handle({{"cmd", "set_mode"}, {"mode", "recording"}});
  CHECK_FALSE(reply.at("ok").get<bool>());
  reply = handler.handle({{"cmd", "set_mode"}, {"mode", "recording"}, {"token", "secret"}});
  CHECK(reply.at("ok").get<bool>());
  CHECK(state.mode() == ProxyMode::Recording);

  state.record("t", "c", Bytes("\xff\x00z", 3));
  reply = handler.handle({{"cmd", "get_events"}, {"token", "secret"}});
  REQUIRE(reply.at("ok").get<bool>());
  const auto ev = event_from_json(reply.at("events").at(0));
  CHECK(ev.value == Bytes("\xff\x00z", 3));
  CHECK(ev.table == std::optional<std::string>("t"));

  InjectionSpec spec;
  spec.column = "c";
  spec.payload = Bytes("\x80<", 2);
  const auto back = spec_from_json(spec_to_json(spec));
  CHECK(back.payload == spec.payload);
  CHECK(back.column == spec.column);
  CHECK_FALSE(back.table.has_value());

  CHECK_FALSE(nlohmann::json::parse(handler.handle_line("not json")).at("ok").get<bool>());
  CHECK_FALSE(handler.handle({{"cmd", "bogus"}, {"token", "secret"}}).at("ok").get<bool>());
  CHECK_FALSE(handler.handle({{"cmd", "set_mode"}, {"mode", "loud"}, {"token", "secret"}}).at("ok").get<bool>());
}
