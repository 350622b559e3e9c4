#include "graybox/fixture/db_server.hpp"

#include <random>

#include <spdlog/spdlog.h>

#include "graybox/mysql/client.hpp"
#include "graybox/mysql/protocol.hpp"

namespace graybox::fixture {

namespace {

using namespace graybox::mysql;

constexpr std::uint32_t kServerCaps = cap::kLongPassword | cap::kConnectWithDb | cap::kProtocol41 |
                                      cap::kTransactions | cap::kSecureConnection | cap::kMultiStatements |
                                      cap::kMultiResults | cap::kPluginAuth | cap::kPluginAuthLenencData;
constexpr char kPlugin[] = "mysql_native_password";

class Conversation {
 public:
  explicit Conversation(net::Socket& socket) : socket_(socket) {}

  std::optional<Frame> read() {
    for (;;) {
      if (auto frame = reader_.next()) return frame;
      char buf[16 * 1024];
      const auto n = socket_.read_some(buf, sizeof buf);
      if (n == 0) return std::nullopt;
      reader_.feed(BytesView(buf, n));
    }
  }

  void send(BytesView payload) {
    Bytes out;
    seq_ = static_cast<std::uint8_t>(seq_ + write_frame(out, payload, seq_));
    socket_.write_all(out);
  }

  void reset_seq(std::uint8_t seq) { seq_ = seq; }

  void ok(std::uint64_t affected, std::uint16_t status_flags) {
    Bytes p(1, '\0');
    put_lenenc_int(p, affected);
    put_lenenc_int(p, 0);
    put_int(p, status_flags, 2);
    put_int(p, 0, 2);
    send(p);
  }

  void err(std::uint16_t code, std::string_view message) {
    Bytes p(1, '\xff');
    put_int(p, code, 2);
    p.append("#HY000");
    p.append(message);
    send(p);
  }

 private:
  net::Socket& socket_;
  FrameReader reader_;
  std::uint8_t seq_ = 0;
};

}  // namespace

DbServer::DbServer(DbServerOptions options, std::shared_ptr<Database> db)
    : options_(std::move(options)),
      db_(db ? std::move(db) : std::make_shared<Database>()),
      server_(options_.listen, [this](net::Socket& s) { serve(s); }) {}

DbServer::~DbServer() { stop(); }

void DbServer::start() {
  server_.start();
  spdlog::info("fixture database listening on port {}", server_.port());
}

void DbServer::stop() { server_.stop(); }

void DbServer::serve(net::Socket& socket) {
  Conversation conv(socket);
  std::uint32_t server_caps = kServerCaps;
  if (options_.offer_deprecate_eof) server_caps |= cap::kDeprecateEof;
  if (options_.advertise_refused_caps) server_caps |= cap::kSsl | cap::kCompress;

  std::mt19937 rng(std::random_device{}());
  Bytes salt(20, '\0');
  for (auto& c : salt) c = static_cast<char>('!' + rng() % 90);

  Bytes greeting(1, '\x0a');
  greeting.append("8.0.36-graybox-fixture");
  greeting.push_back('\0');
  put_int(greeting, next_connection_id_++, 4);
  greeting.append(salt.substr(0, 8));
  greeting.push_back('\0');
  put_int(greeting, server_caps & 0xFFFF, 2);
  put_int(greeting, 45, 1);
  put_int(greeting, status::kAutocommit, 2);
  put_int(greeting, server_caps >> 16, 2);
  put_int(greeting, salt.size() + 1, 1);
  greeting.append(10, '\0');
  greeting.append(salt.substr(8));
  greeting.push_back('\0');
  greeting.append(kPlugin);
  greeting.push_back('\0');

  try {
    conv.send(greeting);
    const auto response = conv.read();
    if (!response) return;
    conv.reset_seq(static_cast<std::uint8_t>(response->first_seq + 1));

    PayloadReader r(response->payload);
    const auto client_caps = static_cast<std::uint32_t>(r.fixed_int(4));
    r.fixed_int(4);
    r.byte();
    r.bytes(23);
    const std::string user(r.null_terminated());
    Bytes auth;
    if (client_caps & cap::kPluginAuthLenencData) {
      auth = Bytes(r.lenenc_str().value_or(BytesView{}));
    } else if (client_caps & cap::kSecureConnection) {
      auth = Bytes(r.bytes(r.byte()));
    } else {
      auth = Bytes(r.null_terminated());
    }

    const auto it = options_.users.find(user);
    if (it == options_.users.end() || native_password_scramble(it->second, salt) != auth) {
      conv.err(1045, "Access denied for user '" + user + "'");
      return;
    }
    const bool deprecate_eof = client_caps & server_caps & cap::kDeprecateEof;
    const bool multi_statements = client_caps & cap::kMultiStatements;
    conv.ok(0, status::kAutocommit);

    while (auto frame = conv.read()) {
      conv.reset_seq(static_cast<std::uint8_t>(frame->first_seq + 1));
      if (frame->payload.empty()) break;
      const auto command = static_cast<Command>(frame->payload[0]);
      const auto arg = BytesView(frame->payload).substr(1);
      if (command == Command::Quit) break;
      if (command == Command::Ping || command == Command::InitDb || command == Command::ResetConnection) {
        conv.ok(0, status::kAutocommit);
        continue;
      }
      if (command != Command::Query) {
        conv.err(1047, "Unknown command");
        continue;
      }
      ++queries_;
      std::vector<std::string> statements;
      if (multi_statements) {
        statements = split_statements(arg);
      } else {
        statements.emplace_back(arg);
      }
      if (statements.empty()) {
        conv.err(1065, "Query was empty");
        continue;
      }
      for (std::size_t i = 0; i < statements.size(); ++i) {
        const std::uint16_t flags =
            status::kAutocommit | (i + 1 < statements.size() ? status::kMoreResultsExist : 0);
        StatementResult result;
        try {
          result = db_->execute(statements[i]);
        } catch (const SqlError& e) {
          conv.err(e.code(), e.what());
          break;
        }
        if (!result.has_rows) {
          conv.ok(result.affected_rows, flags);
          continue;
        }
        Bytes count;
        put_lenenc_int(count, result.columns.size());
        conv.send(count);
        for (const auto& column : result.columns) conv.send(column.encode());
        Bytes eof(1, '\xfe');
        put_int(eof, 0, 2);
        put_int(eof, flags, 2);
        if (!deprecate_eof) conv.send(eof);
        for (const auto& row : result.rows) conv.send(encode_text_row(row));
        if (deprecate_eof) {
          Bytes end(1, '\xfe');
          put_lenenc_int(end, 0);
          put_lenenc_int(end, 0);
          put_int(end, flags, 2);
          put_int(end, 0, 2);
          conv.send(end);
        } else {
          conv.send(eof);
        }
      }
    }
  } catch (const std::exception& e) {
    spdlog::debug("fixture database connection ended: {}", e.what());
  }
}

}  // namespace graybox::fixture
