#pragma once

// MySQL client/server wire protocol primitives: packet framing with the
// 16 MiB continuation rule, length-encoded integers and strings, column
// definition packets and text-protocol result rows.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "graybox/bytes.hpp"

namespace graybox::mysql {

inline constexpr std::size_t kMaxPayload = 0xFFFFFF;
inline constexpr std::size_t kHeaderSize = 4;

namespace cap {
inline constexpr std::uint32_t kLongPassword = 0x00000001;
inline constexpr std::uint32_t kConnectWithDb = 0x00000008;
inline constexpr std::uint32_t kCompress = 0x00000020;
inline constexpr std::uint32_t kProtocol41 = 0x00000200;
inline constexpr std::uint32_t kSsl = 0x00000800;
inline constexpr std::uint32_t kTransactions = 0x00002000;
inline constexpr std::uint32_t kSecureConnection = 0x00008000;
inline constexpr std::uint32_t kMultiStatements = 0x00010000;
inline constexpr std::uint32_t kMultiResults = 0x00020000;
inline constexpr std::uint32_t kPluginAuth = 0x00080000;
inline constexpr std::uint32_t kPluginAuthLenencData = 0x00200000;
inline constexpr std::uint32_t kDeprecateEof = 0x01000000;
inline constexpr std::uint32_t kZstdCompression = 0x04000000;
}  // namespace cap

namespace status {
inline constexpr std::uint16_t kAutocommit = 0x0002;
inline constexpr std::uint16_t kMoreResultsExist = 0x0008;
}  // namespace status

enum class Command : std::uint8_t {
  Quit = 0x01,
  InitDb = 0x02,
  Query = 0x03,
  FieldList = 0x04,
  Ping = 0x0e,
  StmtPrepare = 0x16,
  StmtExecute = 0x17,
  StmtClose = 0x19,
  ResetConnection = 0x1f,
};

/// Column type codes from the protocol registry (include/field_types.h).
enum class ColumnType : std::uint8_t {
  Decimal = 0,
  Tiny = 1,
  Short = 2,
  Long = 3,
  Float = 4,
  Double = 5,
  Null = 6,
  Timestamp = 7,
  LongLong = 8,
  Int24 = 9,
  Date = 10,
  Time = 11,
  DateTime = 12,
  Year = 13,
  NewDate = 14,
  VarChar = 15,
  Bit = 16,
  Timestamp2 = 17,
  DateTime2 = 18,
  Time2 = 19,
  TypedArray = 20,
  Vector = 242,
  Invalid = 243,
  Bool = 244,
  Json = 245,
  NewDecimal = 246,
  Enum = 247,
  Set = 248,
  TinyBlob = 249,
  MediumBlob = 250,
  LongBlob = 251,
  Blob = 252,
  VarString = 253,
  String = 254,
  Geometry = 255,
};

/// True exactly for VARCHAR, VAR_STRING and STRING.
constexpr bool is_string_family(std::uint8_t type_code) {
  return type_code == static_cast<std::uint8_t>(ColumnType::VarChar) ||
         type_code == static_cast<std::uint8_t>(ColumnType::VarString) ||
         type_code == static_cast<std::uint8_t>(ColumnType::String);
}

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- length-encoded values -------------------------------------------------

void put_int(Bytes& out, std::uint64_t value, std::size_t width);
void put_lenenc_int(Bytes& out, std::uint64_t value);
void put_lenenc_str(Bytes& out, BytesView value);

/// Sequential reader over a packet payload. All reads throw ProtocolError on
/// truncation.
class PayloadReader {
 public:
  explicit PayloadReader(BytesView data) : data_(data) {}

  std::uint64_t fixed_int(std::size_t width);
  std::uint8_t byte() { return static_cast<std::uint8_t>(fixed_int(1)); }
  /// Returns nullopt for the 0xFB NULL marker.
  std::optional<std::uint64_t> lenenc_int();
  std::optional<BytesView> lenenc_str();
  BytesView bytes(std::size_t n);
  BytesView null_terminated();
  BytesView rest();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ >= data_.size(); }

 private:
  BytesView data_;
  std::size_t pos_ = 0;
};

// ---- framing -----------------------------------------------------------------

/// One logical packet: the payload of one or more physical packets joined by
/// the continuation rule, together with the exact bytes it arrived as.
struct Frame {
  std::uint8_t first_seq = 0;
  std::size_t physical_count = 0;
  Bytes payload;
  Bytes raw;
};

/// Incremental packet reassembler. Bytes are pushed as they arrive from a
/// socket (or a captured trace); complete logical packets are popped.
class FrameReader {
 public:
  void feed(BytesView data) { buffer_.append(data); }
  std::optional<Frame> next();
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  Bytes buffer_;
  std::size_t offset_ = 0;
};

/// Serializes a logical payload into physical packets starting at `seq`.
/// A payload that is an exact multiple of 0xFFFFFF is terminated by an empty
/// packet. Returns the number of physical packets written.
std::size_t write_frame(Bytes& out, BytesView payload, std::uint8_t seq);

std::size_t physical_packet_count(std::size_t payload_size);

// ---- packet classification -------------------------------------------------

inline bool is_ok_packet(BytesView p) { return !p.empty() && static_cast<std::uint8_t>(p[0]) == 0x00; }
inline bool is_err_packet(BytesView p) { return !p.empty() && static_cast<std::uint8_t>(p[0]) == 0xFF; }
/// Legacy EOF packet (0xFE, under 9 bytes).
inline bool is_eof_packet(BytesView p) { return !p.empty() && static_cast<std::uint8_t>(p[0]) == 0xFE && p.size() < 9; }
/// Result-set terminator when CLIENT_DEPRECATE_EOF is negotiated: an OK
/// packet with a 0xFE header.
inline bool is_eof_ok_packet(BytesView p) {
  return !p.empty() && static_cast<std::uint8_t>(p[0]) == 0xFE && p.size() < kMaxPayload;
}

/// Server status flags of an OK or EOF packet; 0 for anything else.
std::uint16_t terminator_status(BytesView p, bool deprecate_eof);

// ---- column definitions and rows --------------------------------------------

/// Parsed ColumnDefinition41.
struct ColumnDefinition {
  Bytes catalog = "def";
  Bytes schema;
  Bytes table;
  Bytes org_table;
  Bytes name;
  Bytes org_name;
  std::uint16_t charset = 45;
  std::uint32_t column_length = 0;
  std::uint8_t type = 0;
  std::uint16_t flags = 0;
  std::uint8_t decimals = 0;

  static ColumnDefinition parse(BytesView payload);
  Bytes encode() const;
};

/// What the proxy keeps about each result-set column.
struct ResultSetColumnMeta {
  std::string column_name;
  std::optional<std::string> table_name;
  std::uint8_t type_code = 0;
  bool is_string_family = false;
};

/// Classifies a raw column-definition payload. Malformed packets classify as
/// non-string so they are never rewritten.
ResultSetColumnMeta classify_column(BytesView payload);

/// A text-protocol row: one optional byte string per column.
using TextRow = std::vector<std::optional<Bytes>>;

TextRow parse_text_row(BytesView payload, std::size_t column_count);
Bytes encode_text_row(const TextRow& row);

// ---- handshake -----------------------------------------------------------------

/// Byte offsets of the capability words inside a protocol-10 server greeting.
struct GreetingLayout {
  std::size_t caps_lower = 0;
  std::optional<std::size_t> caps_upper;
};

std::optional<GreetingLayout> locate_greeting_caps(BytesView payload);

/// Server capabilities advertised in a greeting.
std::uint32_t greeting_capabilities(BytesView payload);

/// Clears the given capability bits in a greeting or a HandshakeResponse41
/// in place. Returns false if the packet shape is not recognised.
bool clear_greeting_caps(Bytes& payload, std::uint32_t mask);
bool clear_response_caps(Bytes& payload, std::uint32_t mask);

}  // namespace graybox::mysql
