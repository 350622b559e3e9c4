#pragma once

// Socket-free relay core. A RelaySession consumes the raw byte streams of one
// application connection in both directions and produces the bytes to forward.
// The network layer only pumps sockets through it, so captured traces can be
// replayed through exactly the same code.

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <vector>

#include "graybox/mysql/protocol.hpp"
#include "graybox/mysql/proxy_state.hpp"

namespace graybox::mysql {

/// Capabilities the proxy refuses so the link stays plain and uncompressed.
inline constexpr std::uint32_t kRefusedCapabilities = cap::kCompress | cap::kSsl | cap::kZstdCompression;

/// Rows whose rewritten payload would exceed this are passed through untouched.
inline constexpr std::size_t kMaxRewrittenPayload = std::size_t{1} << 30;

/// Applies the active mode to one text-protocol row payload. Returns the
/// replacement payload when at least one cell was injected; records fetch
/// events in recording mode. Malformed rows are left alone.
std::optional<Bytes> rewrite_row(BytesView row_payload, const std::vector<ResultSetColumnMeta>& columns,
                                 const ProxySnapshot& snapshot, ProxyState& state);

class RelaySession {
 public:
  explicit RelaySession(ProxyState& state) : state_(state) {}

  /// Bytes from the application towards the database.
  Bytes from_client(BytesView chunk);
  /// Bytes from the database towards the application.
  Bytes from_server(BytesView chunk);

  bool in_command_phase() const;
  std::uint32_t negotiated_capabilities() const;

 private:
  enum class Phase { Greeting, Auth, Command };
  enum class Expect { None, Query, Opaque };
  enum class ResultState { AwaitFirst, Columns, ColumnsEof, Rows, Done };

  void handle_server_frame(Frame& frame, Bytes& out);
  void handle_query_packet(Frame& frame, Bytes& out);
  void emit(const Frame& frame, Bytes& out) const;
  void emit_rewritten(const Frame& frame, BytesView payload, Bytes& out);
  void begin_result_set_cycle();

  ProxyState& state_;
  FrameReader client_reader_;
  FrameReader server_reader_;

  // Shared between the two directions.
  mutable std::mutex mutex_;
  Phase phase_ = Phase::Greeting;
  bool saw_client_response_ = false;
  std::uint32_t server_caps_ = 0;
  std::uint32_t client_caps_ = 0;
  std::deque<Expect> pending_;

  // Server-direction response tracking.
  Expect current_ = Expect::None;
  ResultState result_state_ = ResultState::Done;
  std::uint64_t columns_expected_ = 0;
  std::vector<ResultSetColumnMeta> columns_;
  ProxySnapshot snapshot_;
  int seq_delta_ = 0;
  bool deprecate_eof_ = false;
};

}  // namespace graybox::mysql
