#include "graybox/mysql/protocol.hpp"

#include <algorithm>

namespace graybox::mysql {

void put_int(Bytes& out, std::uint64_t value, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

void put_lenenc_int(Bytes& out, std::uint64_t value) {
  if (value < 0xFB) {
    put_int(out, value, 1);
  } else if (value <= 0xFFFF) {
    out.push_back(static_cast<char>(0xFC));
    put_int(out, value, 2);
  } else if (value <= 0xFFFFFF) {
    out.push_back(static_cast<char>(0xFD));
    put_int(out, value, 3);
  } else {
    out.push_back(static_cast<char>(0xFE));
    put_int(out, value, 8);
  }
}

void put_lenenc_str(Bytes& out, BytesView value) {
  put_lenenc_int(out, value.size());
  out.append(value);
}

std::uint64_t PayloadReader::fixed_int(std::size_t width) {
  if (remaining() < width) throw ProtocolError("truncated integer");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
  }
  pos_ += width;
  return v;
}

std::optional<std::uint64_t> PayloadReader::lenenc_int() {
  const auto first = byte();
  switch (first) {
    case 0xFB:
      return std::nullopt;
    case 0xFC:
      return fixed_int(2);
    case 0xFD:
      return fixed_int(3);
    case 0xFE:
      return fixed_int(8);
    case 0xFF:
      throw ProtocolError("0xFF is not a length-encoded integer");
    default:
      return first;
  }
}

std::optional<BytesView> PayloadReader::lenenc_str() {
  auto len = lenenc_int();
  if (!len) return std::nullopt;
  return bytes(static_cast<std::size_t>(*len));
}

BytesView PayloadReader::bytes(std::size_t n) {
  if (remaining() < n) throw ProtocolError("truncated string");
  auto v = data_.substr(pos_, n);
  pos_ += n;
  return v;
}

BytesView PayloadReader::null_terminated() {
  const auto end = data_.find('\0', pos_);
  if (end == BytesView::npos) throw ProtocolError("unterminated string");
  auto v = data_.substr(pos_, end - pos_);
  pos_ = end + 1;
  return v;
}

BytesView PayloadReader::rest() {
  auto v = data_.substr(pos_);
  pos_ = data_.size();
  return v;
}

std::optional<Frame> FrameReader::next() {
  // Walk the physical packets of one logical packet without consuming until
  // the final one has fully arrived.
  std::size_t cursor = offset_;
  std::size_t count = 0;
  Frame frame;
  for (;;) {
    if (buffer_.size() - cursor < kHeaderSize) return std::nullopt;
    const auto* h = reinterpret_cast<const std::uint8_t*>(buffer_.data() + cursor);
    const std::size_t len = h[0] | (h[1] << 8) | (h[2] << 16);
    if (buffer_.size() - cursor - kHeaderSize < len) return std::nullopt;
    if (count == 0) frame.first_seq = h[3];
    frame.payload.append(buffer_, cursor + kHeaderSize, len);
    cursor += kHeaderSize + len;
    ++count;
    if (len < kMaxPayload) break;
  }
  frame.physical_count = count;
  frame.raw.assign(buffer_, offset_, cursor - offset_);
  offset_ = cursor;
  if (offset_ > (1u << 20) && offset_ * 2 > buffer_.size()) {
    buffer_.erase(0, offset_);
    offset_ = 0;
  }
  return frame;
}

std::size_t physical_packet_count(std::size_t payload_size) { return payload_size / kMaxPayload + 1; }

std::size_t write_frame(Bytes& out, BytesView payload, std::uint8_t seq) {
  std::size_t count = 0;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t chunk = std::min(kMaxPayload, payload.size() - pos);
    put_int(out, chunk, 3);
    out.push_back(static_cast<char>(static_cast<std::uint8_t>(seq + count)));
    out.append(payload.substr(pos, chunk));
    pos += chunk;
    ++count;
    if (chunk < kMaxPayload) break;
  }
  return count;
}

std::uint16_t terminator_status(BytesView p, bool deprecate_eof) {
  try {
    if (is_eof_packet(p) && !deprecate_eof) {
      PayloadReader r(p);
      r.byte();
      if (r.remaining() >= 4) {
        r.fixed_int(2);  // warnings
        return static_cast<std::uint16_t>(r.fixed_int(2));
      }
      return 0;
    }
    if (is_ok_packet(p) || (deprecate_eof && is_eof_ok_packet(p))) {
      PayloadReader r(p);
      r.byte();
      r.lenenc_int();  // affected rows
      r.lenenc_int();  // last insert id
      return static_cast<std::uint16_t>(r.fixed_int(2));
    }
  } catch (const ProtocolError&) {
  }
  return 0;
}

ColumnDefinition ColumnDefinition::parse(BytesView payload) {
  PayloadReader r(payload);
  ColumnDefinition def;
  auto str = [&r]() {
    auto v = r.lenenc_str();
    if (!v) throw ProtocolError("NULL in column definition");
    return Bytes(*v);
  };
  def.catalog = str();
  def.schema = str();
  def.table = str();
  def.org_table = str();
  def.name = str();
  def.org_name = str();
  auto fixed_len = r.lenenc_int();
  if (!fixed_len || *fixed_len < 10) throw ProtocolError("bad fixed-length field block");
  def.charset = static_cast<std::uint16_t>(r.fixed_int(2));
  def.column_length = static_cast<std::uint32_t>(r.fixed_int(4));
  def.type = r.byte();
  def.flags = static_cast<std::uint16_t>(r.fixed_int(2));
  def.decimals = r.byte();
  return def;
}

Bytes ColumnDefinition::encode() const {
  Bytes out;
  put_lenenc_str(out, catalog);
  put_lenenc_str(out, schema);
  put_lenenc_str(out, table);
  put_lenenc_str(out, org_table);
  put_lenenc_str(out, name);
  put_lenenc_str(out, org_name);
  put_lenenc_int(out, 0x0c);
  put_int(out, charset, 2);
  put_int(out, column_length, 4);
  put_int(out, type, 1);
  put_int(out, flags, 2);
  put_int(out, decimals, 1);
  put_int(out, 0, 2);
  return out;
}

ResultSetColumnMeta classify_column(BytesView payload) {
  ResultSetColumnMeta meta;
  try {
    const auto def = ColumnDefinition::parse(payload);
    meta.column_name = def.name;
    if (!def.org_table.empty()) {
      meta.table_name = def.org_table;
    }
    meta.type_code = def.type;
    meta.is_string_family = is_string_family(def.type);
  } catch (const ProtocolError&) {
    meta.is_string_family = false;
  }
  return meta;
}

TextRow parse_text_row(BytesView payload, std::size_t column_count) {
  PayloadReader r(payload);
  TextRow row;
  row.reserve(column_count);
  for (std::size_t i = 0; i < column_count; ++i) {
    auto v = r.lenenc_str();
    if (v) {
      row.emplace_back(Bytes(*v));
    } else {
      row.emplace_back(std::nullopt);
    }
  }
  if (!r.done()) throw ProtocolError("trailing bytes after text row");
  return row;
}

Bytes encode_text_row(const TextRow& row) {
  Bytes out;
  for (const auto& cell : row) {
    if (cell) {
      put_lenenc_str(out, *cell);
    } else {
      out.push_back(static_cast<char>(0xFB));
    }
  }
  return out;
}

std::optional<GreetingLayout> locate_greeting_caps(BytesView payload) {
  try {
    PayloadReader r(payload);
    if (r.byte() != 10) return std::nullopt;
    r.null_terminated();  // server version
    r.fixed_int(4);       // connection id
    r.bytes(8);           // auth-plugin-data part 1
    r.byte();             // filler
    GreetingLayout layout;
    layout.caps_lower = r.position();
    r.fixed_int(2);
    if (r.remaining() >= 3) {
      r.byte();       // character set
      r.fixed_int(2); // status flags
      if (r.remaining() >= 2) layout.caps_upper = r.position();
    }
    return layout;
  } catch (const ProtocolError&) {
    return std::nullopt;
  }
}

std::uint32_t greeting_capabilities(BytesView payload) {
  auto layout = locate_greeting_caps(payload);
  if (!layout) return 0;
  PayloadReader lower(payload.substr(layout->caps_lower));
  std::uint32_t caps = static_cast<std::uint32_t>(lower.fixed_int(2));
  if (layout->caps_upper) {
    PayloadReader upper(payload.substr(*layout->caps_upper));
    caps |= static_cast<std::uint32_t>(upper.fixed_int(2)) << 16;
  }
  return caps;
}

namespace {

void clear_bits_at(Bytes& payload, std::size_t offset, std::uint16_t mask) {
  payload[offset] = static_cast<char>(static_cast<std::uint8_t>(payload[offset]) & ~(mask & 0xFF));
  payload[offset + 1] = static_cast<char>(static_cast<std::uint8_t>(payload[offset + 1]) & ~(mask >> 8));
}

}  // namespace

bool clear_greeting_caps(Bytes& payload, std::uint32_t mask) {
  auto layout = locate_greeting_caps(payload);
  if (!layout) return false;
  clear_bits_at(payload, layout->caps_lower, static_cast<std::uint16_t>(mask & 0xFFFF));
  if (layout->caps_upper) clear_bits_at(payload, *layout->caps_upper, static_cast<std::uint16_t>(mask >> 16));
  return true;
}

bool clear_response_caps(Bytes& payload, std::uint32_t mask) {
  if (payload.size() < 4) return false;
  clear_bits_at(payload, 0, static_cast<std::uint16_t>(mask & 0xFFFF));
  if (static_cast<std::uint8_t>(payload[1]) & (cap::kProtocol41 >> 8)) {
    clear_bits_at(payload, 2, static_cast<std::uint16_t>(mask >> 16));
  }
  return true;
}

}  // namespace graybox::mysql
