#include "graybox/mysql/client.hpp"

#include <openssl/sha.h>

namespace graybox::mysql {

namespace {

Bytes sha1(BytesView data) {
  Bytes out(SHA_DIGEST_LENGTH, '\0');
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), reinterpret_cast<unsigned char*>(out.data()));
  return out;
}

[[noreturn]] void throw_server_error(BytesView payload) {
  PayloadReader r(payload);
  r.byte();
  const auto code = static_cast<std::uint16_t>(r.remaining() >= 2 ? r.fixed_int(2) : 0);
  auto rest = r.rest();
  if (!rest.empty() && rest[0] == '#' && rest.size() >= 6) rest.remove_prefix(6);  // SQL state
  throw ServerError(code, std::string(rest));
}

}  // namespace

Bytes native_password_scramble(std::string_view password, BytesView salt) {
  if (password.empty()) return {};
  const auto stage1 = sha1(password);
  const auto stage2 = sha1(stage1);
  const auto mix = sha1(Bytes(salt) + stage2);
  Bytes out(stage1.size(), '\0');
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<char>(stage1[i] ^ mix[i]);
  return out;
}

Client::~Client() {
  try {
    close();
  } catch (...) {
  }
}

Frame Client::read_frame() {
  for (;;) {
    if (auto frame = reader_.next()) return std::move(*frame);
    char buf[16 * 1024];
    const auto n = socket_.read_some(buf, sizeof buf);
    if (n == 0) throw ProtocolError("server closed the connection");
    reader_.feed(BytesView(buf, n));
  }
}

void Client::send(BytesView payload, std::uint8_t seq) {
  Bytes out;
  write_frame(out, payload, seq);
  socket_.write_all(out);
}

Client Client::connect(const ClientOptions& options) {
  Client c;
  c.socket_ = net::Socket::connect(options.endpoint, options.timeout_ms);
  c.socket_.set_timeout(options.timeout_ms);

  const auto greeting = c.read_frame();
  if (is_err_packet(greeting.payload)) throw_server_error(greeting.payload);
  PayloadReader r(greeting.payload);
  if (r.byte() != 10) throw ProtocolError("unsupported handshake protocol");
  r.null_terminated();
  r.fixed_int(4);
  Bytes salt(r.bytes(8));
  r.byte();
  std::uint32_t server_caps = static_cast<std::uint32_t>(r.fixed_int(2));
  std::string plugin = "mysql_native_password";
  if (!r.done()) {
    r.byte();
    r.fixed_int(2);
    server_caps |= static_cast<std::uint32_t>(r.fixed_int(2)) << 16;
    const auto auth_len = r.byte();
    r.bytes(10);
    if (server_caps & cap::kSecureConnection) {
      const std::size_t part2 = std::max<int>(13, auth_len - 8);
      auto more = r.bytes(std::min(part2, r.remaining()));
      salt.append(more);
      if (!salt.empty() && salt.back() == '\0') salt.pop_back();
    }
    if ((server_caps & cap::kPluginAuth) && !r.done()) plugin = std::string(r.null_terminated());
  }

  std::uint32_t caps = cap::kLongPassword | cap::kProtocol41 | cap::kSecureConnection | cap::kTransactions |
                       cap::kMultiResults | cap::kPluginAuth;
  if (!options.database.empty()) caps |= cap::kConnectWithDb;
  if (options.request_deprecate_eof) caps |= cap::kDeprecateEof;
  if (options.multi_statements) caps |= cap::kMultiStatements;
  caps &= server_caps | cap::kProtocol41;
  c.capabilities_ = caps;

  Bytes response;
  put_int(response, caps, 4);
  put_int(response, kMaxPayload, 4);
  put_int(response, 45, 1);
  response.append(23, '\0');
  response.append(options.user);
  response.push_back('\0');
  const auto auth = plugin == "mysql_native_password" ? native_password_scramble(options.password, salt) : Bytes{};
  put_int(response, auth.size(), 1);
  response.append(auth);
  if (caps & cap::kConnectWithDb) {
    response.append(options.database);
    response.push_back('\0');
  }
  if (caps & cap::kPluginAuth) {
    response.append(plugin);
    response.push_back('\0');
  }
  c.send(response, static_cast<std::uint8_t>(greeting.first_seq + 1));

  for (;;) {
    const auto reply = c.read_frame();
    if (is_ok_packet(reply.payload)) break;
    if (is_err_packet(reply.payload)) throw_server_error(reply.payload);
    if (!reply.payload.empty() && static_cast<std::uint8_t>(reply.payload[0]) == 0xFE) {
      PayloadReader sw(reply.payload);
      sw.byte();
      const std::string new_plugin(sw.null_terminated());
      Bytes new_salt(sw.rest());
      if (!new_salt.empty() && new_salt.back() == '\0') new_salt.pop_back();
      if (new_plugin != "mysql_native_password") throw ProtocolError("unsupported auth plugin " + new_plugin);
      c.send(native_password_scramble(options.password, new_salt), static_cast<std::uint8_t>(reply.first_seq + 1));
      continue;
    }
    throw ProtocolError("unexpected packet during authentication");
  }
  c.open_ = true;
  return c;
}

ResultSet Client::read_result_set(std::uint64_t column_count, std::uint16_t& status_flags) {
  const bool deprecate_eof = capabilities_ & cap::kDeprecateEof;
  ResultSet rs;
  for (std::uint64_t i = 0; i < column_count; ++i) rs.columns.push_back(ColumnDefinition::parse(read_frame().payload));
  if (!deprecate_eof) {
    const auto eof = read_frame();
    if (!is_eof_packet(eof.payload)) throw ProtocolError("expected EOF after column definitions");
  }
  for (;;) {
    auto frame = read_frame();
    if (is_err_packet(frame.payload)) throw_server_error(frame.payload);
    const bool terminator = deprecate_eof ? is_eof_ok_packet(frame.payload) : is_eof_packet(frame.payload);
    if (terminator) {
      status_flags = terminator_status(frame.payload, deprecate_eof);
      return rs;
    }
    rs.rows.push_back(parse_text_row(frame.payload, column_count));
  }
}

QueryResult Client::query(std::string_view sql) {
  Bytes payload(1, static_cast<char>(Command::Query));
  payload.append(sql);
  send(payload, 0);

  QueryResult result;
  for (;;) {
    const auto first = read_frame();
    std::uint16_t status_flags = 0;
    if (is_err_packet(first.payload)) throw_server_error(first.payload);
    if (is_ok_packet(first.payload)) {
      PayloadReader r(first.payload);
      r.byte();
      result.affected_rows += r.lenenc_int().value_or(0);
      r.lenenc_int();
      status_flags = static_cast<std::uint16_t>(r.fixed_int(2));
    } else {
      PayloadReader r(first.payload);
      const auto count = r.lenenc_int();
      if (!count) throw ProtocolError("LOCAL INFILE is not supported");
      result.result_sets.push_back(read_result_set(*count, status_flags));
    }
    if (!(status_flags & status::kMoreResultsExist)) return result;
  }
}

void Client::ping() {
  send(Bytes(1, static_cast<char>(Command::Ping)), 0);
  const auto reply = read_frame();
  if (is_err_packet(reply.payload)) throw_server_error(reply.payload);
}

void Client::close() {
  if (!open_) return;
  open_ = false;
  try {
    send(Bytes(1, static_cast<char>(Command::Quit)), 0);
  } catch (const net::NetError&) {
  }
  socket_.close();
}

}  // namespace graybox::mysql
