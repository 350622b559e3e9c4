#include <doctest.h>

#include <random>

#include "graybox/mysql/protocol.hpp"

using namespace graybox;
using namespace graybox::mysql;

namespace {

Bytes random_bytes(std::mt19937_64& rng, std::size_t n) {
  Bytes b(n, '\0');
  for (auto& c : b) c = static_cast<char>(rng() & 0xFF);
  return b;
}

/// Reference framer written from the protocol description: chunks of at most
/// 0xFFFFFF bytes, an empty trailer when the last chunk is full.
Bytes reference_frame(BytesView payload, std::uint8_t seq) {
  Bytes out;
  std::size_t pos = 0;
  for (;;) {
    const auto n = std::min<std::size_t>(payload.size() - pos, 0xFFFFFF);
    out += static_cast<char>(n & 0xFF);
    out += static_cast<char>((n >> 8) & 0xFF);
    out += static_cast<char>((n >> 16) & 0xFF);
    out += static_cast<char>(seq++);
    out.append(payload.substr(pos, n));
    pos += n;
    if (n < 0xFFFFFF) break;
  }
  return out;
}

}  // namespace

TEST_CASE("lenenc integers use the shortest prefix form and round-trip") {
  const std::pair<std::uint64_t, std::size_t> cases[] = {
      {0, 1}, {250, 1}, {251, 3}, {0xFFFF, 3}, {0x10000, 4}, {0xFFFFFF, 4}, {0x1000000, 9}, {~0ULL, 9}};
  for (const auto& [v, size] : cases) {
    Bytes b;
    put_lenenc_int(b, v);
    CHECK(b.size() == size);
    PayloadReader r(b);
    CHECK(r.lenenc_int() == v);
    CHECK(r.done());
  }
}

TEST_CASE("lenenc NULL marker and truncation") {
  Bytes b("\xfb", 1);
  PayloadReader r(b);
  CHECK_FALSE(r.lenenc_int().has_value());
  Bytes t("\xfc\x01", 2);
  PayloadReader r2(t);
  CHECK_THROWS_AS(r2.lenenc_int(), ProtocolError);
}

TEST_CASE("framing matches the reference framer and round-trips") {
  std::mt19937_64 rng(7);
  const std::size_t sizes[] = {0, 1, 250, 0xFFFFFE, 0xFFFFFF, 0xFFFFFF + 1, 2 * 0xFFFFFF, 2 * 0xFFFFFF + 5};
  for (const auto n : sizes) {
    const auto payload = random_bytes(rng, n);
    Bytes out;
    const auto count = write_frame(out, payload, 3);
    CHECK(out == reference_frame(payload, 3));
    CHECK(count == physical_packet_count(n));

    FrameReader reader;
    reader.feed(out);
    auto f = reader.next();
    REQUIRE(f.has_value());
    CHECK(f->payload == payload);
    CHECK(f->raw == out);
    CHECK(f->first_seq == 3);
    CHECK(f->physical_count == count);
    CHECK_FALSE(reader.next().has_value());
  }
}

TEST_CASE("frame reader reassembles across arbitrary chunk boundaries") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Bytes stream;
    std::vector<Bytes> payloads;
    for (int k = 0; k < 5; ++k) {
      payloads.push_back(random_bytes(rng, rng() % 300));
      write_frame(stream, payloads.back(), static_cast<std::uint8_t>(k));
    }
    FrameReader reader;
    std::vector<Bytes> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const auto n = std::min<std::size_t>(1 + rng() % 40, stream.size() - pos);
      reader.feed(BytesView(stream).substr(pos, n));
      pos += n;
      while (auto f = reader.next()) got.push_back(f->payload);
    }
    CHECK(got == payloads);
    CHECK(reader.buffered() == 0);
  }
}

TEST_CASE("text rows round-trip including NULL and empty cells") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    TextRow row;
    const auto cols = 1 + rng() % 6;
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng() % 5 == 0) {
        row.emplace_back(std::nullopt);
      } else {
        row.emplace_back(random_bytes(rng, rng() % 300));
      }
    }
    CHECK(parse_text_row(encode_text_row(row), cols) == row);
  }
  CHECK_THROWS_AS(parse_text_row(encode_text_row({Bytes("a")}), 2), ProtocolError);
}

TEST_CASE("column definitions round-trip and classify") {
  ColumnDefinition c;
  c.schema = "fixture";
  c.table = "t";
  c.org_table = "sessions";
  c.name = "topic";
  c.org_name = "topic";
  c.type = static_cast<std::uint8_t>(ColumnType::VarString);
  c.column_length = 1020;
  const auto parsed = ColumnDefinition::parse(c.encode());
  CHECK(parsed.org_table == "sessions");
  CHECK(parsed.name == "topic");
  CHECK(parsed.type == c.type);

  const auto meta = classify_column(c.encode());
  CHECK(meta.table_name == std::optional<std::string>("sessions"));
  CHECK(meta.column_name == "topic");
  CHECK(meta.is_string_family);

  c.org_table = "";
  CHECK_FALSE(classify_column(c.encode()).table_name.has_value());
  CHECK_FALSE(classify_column(Bytes("\x03" "def", 4)).is_string_family);
}

TEST_CASE("string family is exactly VARCHAR, VAR_STRING and STRING") {
  for (int t = 0; t < 256; ++t) {
    const bool expected = t == 15 || t == 253 || t == 254;
    CHECK(is_string_family(static_cast<std::uint8_t>(t)) == expected);
  }
}

TEST_CASE("greeting capability bits are located and cleared") {
  // Protocol 10 greeting with SSL and compression advertised.
  Bytes g;
  g += '\x0a';
  g += "8.0.36";
  g += '\0';
  put_int(g, 42, 4);
  g += "abcdefgh";
  g += '\0';
  const std::uint32_t caps = cap::kProtocol41 | cap::kSsl | cap::kCompress | cap::kSecureConnection |
                             cap::kPluginAuth | cap::kZstdCompression;
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

  CHECK(greeting_capabilities(g) == caps);
  auto copy = g;
  REQUIRE(clear_greeting_caps(copy, cap::kSsl | cap::kCompress | cap::kZstdCompression));
  CHECK(greeting_capabilities(copy) == (cap::kProtocol41 | cap::kSecureConnection | cap::kPluginAuth));
  // Only the two capability words changed.
  std::size_t diffs = 0;
  for (std::size_t i = 0; i < g.size(); ++i) diffs += g[i] != copy[i];
  CHECK(diffs >= 1);
  CHECK(diffs <= 4);
}

TEST_CASE("terminator packets") {
  CHECK(is_eof_packet(Bytes("\xfe\x00\x00\x02\x00", 5)));
  CHECK(terminator_status(Bytes("\xfe\x00\x00\x0a\x00", 5), false) == 0x000a);
  Bytes ok("\xfe\x00\x00", 3);
  put_int(ok, status::kMoreResultsExist, 2);
  put_int(ok, 0, 2);
  CHECK(is_eof_ok_packet(ok));
  CHECK(terminator_status(ok, true) == status::kMoreResultsExist);
}
