#include "graybox/mysql/relay.hpp"

namespace graybox::mysql {

std::optional<Bytes> rewrite_row(BytesView row_payload, const std::vector<ResultSetColumnMeta>& columns,
                                 const ProxySnapshot& snapshot, ProxyState& state) {
  if (snapshot.mode == ProxyMode::Passthrough) return std::nullopt;
  TextRow row;
  try {
    row = parse_text_row(row_payload, columns.size());
  } catch (const ProtocolError&) {
    state.count_malformed();
    return std::nullopt;
  }

  bool modified = false;
  std::size_t injected = 0;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& meta = columns[i];
    auto& cell = row[i];
    if (!meta.is_string_family || !cell) continue;
    if (snapshot.mode == ProxyMode::Recording) {
      state.record(meta.table_name, meta.column_name, *cell);
    } else if (snapshot.specs) {
      if (const auto* spec = find_matching_spec(*snapshot.specs, meta.table_name, meta.column_name, *cell)) {
        cell = spec->payload;
        modified = true;
        ++injected;
      }
    }
  }
  if (!modified) return std::nullopt;

  auto encoded = encode_text_row(row);
  if (encoded.size() > kMaxRewrittenPayload) {
    state.count_oversize_skip();
    return std::nullopt;
  }
  for (std::size_t i = 0; i < injected; ++i) state.count_injected();
  return encoded;
}

Bytes RelaySession::from_client(BytesView chunk) {
  client_reader_.feed(chunk);
  Bytes out;
  while (auto frame = client_reader_.next()) {
    std::lock_guard lock(mutex_);
    if (!saw_client_response_ && phase_ != Phase::Command) {
      saw_client_response_ = true;
      if (frame->payload.size() >= 4) {
        PayloadReader r(frame->payload);
        client_caps_ = static_cast<std::uint32_t>(r.fixed_int(2));
        if (client_caps_ & cap::kProtocol41) client_caps_ |= static_cast<std::uint32_t>(r.fixed_int(2)) << 16;
      }
      if (client_caps_ & kRefusedCapabilities) {
        Bytes payload = frame->payload;
        clear_response_caps(payload, kRefusedCapabilities);
        client_caps_ &= ~kRefusedCapabilities;
        write_frame(out, payload, frame->first_seq);
        continue;
      }
    } else if (phase_ == Phase::Command && frame->first_seq == 0 && !frame->payload.empty()) {
      const auto command = static_cast<Command>(static_cast<std::uint8_t>(frame->payload[0]));
      switch (command) {
        case Command::Query:
          pending_.push_back(Expect::Query);
          break;
        case Command::Quit:
        case Command::StmtClose:
          break;
        case Command::StmtExecute:
          state_.count_binary_command();
          pending_.push_back(Expect::Opaque);
          break;
        default:
          if (static_cast<std::uint8_t>(command) == 0x18) break;  // COM_STMT_SEND_LONG_DATA has no reply
          pending_.push_back(Expect::Opaque);
          break;
      }
    }
    out.append(frame->raw);
  }
  return out;
}

Bytes RelaySession::from_server(BytesView chunk) {
  server_reader_.feed(chunk);
  Bytes out;
  while (auto frame = server_reader_.next()) {
    std::lock_guard lock(mutex_);
    handle_server_frame(*frame, out);
  }
  return out;
}

bool RelaySession::in_command_phase() const {
  std::lock_guard lock(mutex_);
  return phase_ == Phase::Command;
}

std::uint32_t RelaySession::negotiated_capabilities() const {
  std::lock_guard lock(mutex_);
  return server_caps_ & client_caps_;
}

void RelaySession::handle_server_frame(Frame& frame, Bytes& out) {
  switch (phase_) {
    case Phase::Greeting: {
      phase_ = Phase::Auth;
      server_caps_ = greeting_capabilities(frame.payload);
      if (server_caps_ & kRefusedCapabilities) {
        Bytes payload = frame.payload;
        clear_greeting_caps(payload, kRefusedCapabilities);
        server_caps_ &= ~kRefusedCapabilities;
        write_frame(out, payload, frame.first_seq);
        return;
      }
      out.append(frame.raw);
      return;
    }
    case Phase::Auth:
      if (is_ok_packet(frame.payload) || is_err_packet(frame.payload)) {
        phase_ = Phase::Command;
        deprecate_eof_ = (server_caps_ & client_caps_ & cap::kDeprecateEof) != 0;
      }
      out.append(frame.raw);
      return;
    case Phase::Command:
      break;
  }

  const bool idle = current_ == Expect::None || current_ == Expect::Opaque ||
                    (current_ == Expect::Query && result_state_ == ResultState::Done);
  if (idle && !pending_.empty()) {
    current_ = pending_.front();
    pending_.pop_front();
    seq_delta_ = 0;
    if (current_ == Expect::Query) result_state_ = ResultState::AwaitFirst;
  }

  if (current_ == Expect::Query && result_state_ != ResultState::Done) {
    handle_query_packet(frame, out);
  } else {
    emit(frame, out);
  }
}

void RelaySession::begin_result_set_cycle() {
  state_.count_multi_result();
  result_state_ = ResultState::AwaitFirst;
}

void RelaySession::handle_query_packet(Frame& frame, Bytes& out) {
  const BytesView payload = frame.payload;
  switch (result_state_) {
    case ResultState::AwaitFirst: {
      if (is_err_packet(payload)) {
        result_state_ = ResultState::Done;
      } else if (is_ok_packet(payload)) {
        if (terminator_status(payload, deprecate_eof_) & status::kMoreResultsExist) {
          begin_result_set_cycle();
        } else {
          result_state_ = ResultState::Done;
        }
      } else if (!payload.empty() && static_cast<std::uint8_t>(payload[0]) == 0xFB) {
        // LOCAL INFILE request: the client uploads, then the server answers OK/ERR.
      } else {
        try {
          PayloadReader r(payload);
          auto count = r.lenenc_int();
          if (!count || *count == 0 || !r.done()) throw ProtocolError("bad column count");
          columns_expected_ = *count;
          columns_.clear();
          snapshot_ = state_.snapshot();
          result_state_ = ResultState::Columns;
        } catch (const ProtocolError&) {
          state_.count_malformed();
          result_state_ = ResultState::Done;
        }
      }
      emit(frame, out);
      return;
    }
    case ResultState::Columns:
      columns_.push_back(classify_column(payload));
      if (columns_.size() == columns_expected_) {
        result_state_ = deprecate_eof_ ? ResultState::Rows : ResultState::ColumnsEof;
      }
      emit(frame, out);
      return;
    case ResultState::ColumnsEof:
      result_state_ = ResultState::Rows;
      if (is_eof_packet(payload)) {
        emit(frame, out);
        return;
      }
      state_.count_malformed();
      break;  // treat it as the first row
    case ResultState::Rows:
    case ResultState::Done:
      break;
  }

  if (is_err_packet(payload)) {
    result_state_ = ResultState::Done;
    emit(frame, out);
    return;
  }
  const bool terminator = deprecate_eof_ ? is_eof_ok_packet(payload) : is_eof_packet(payload);
  if (terminator) {
    if (terminator_status(payload, deprecate_eof_) & status::kMoreResultsExist) {
      begin_result_set_cycle();
    } else {
      result_state_ = ResultState::Done;
    }
    emit(frame, out);
    return;
  }

  if (auto rewritten = rewrite_row(payload, columns_, snapshot_, state_)) {
    emit_rewritten(frame, *rewritten, out);
  } else {
    emit(frame, out);
  }
}

void RelaySession::emit(const Frame& frame, Bytes& out) const {
  if (seq_delta_ == 0) {
    out.append(frame.raw);
    return;
  }
  // Same bytes, sequence ids shifted by earlier re-framing in this response.
  const std::size_t base = out.size();
  out.append(frame.raw);
  std::size_t pos = base;
  while (pos + kHeaderSize <= out.size()) {
    const auto* h = reinterpret_cast<const std::uint8_t*>(out.data() + pos);
    const std::size_t len = h[0] | (h[1] << 8) | (h[2] << 16);
    out[pos + 3] = static_cast<char>(static_cast<std::uint8_t>(h[3] + seq_delta_));
    pos += kHeaderSize + len;
  }
}

void RelaySession::emit_rewritten(const Frame& frame, BytesView payload, Bytes& out) {
  const auto seq = static_cast<std::uint8_t>(frame.first_seq + seq_delta_);
  const std::size_t written = write_frame(out, payload, seq);
  seq_delta_ += static_cast<int>(written) - static_cast<int>(frame.physical_count);
}

}  // namespace graybox::mysql
