// Regenerates tests/data/traces by tapping real client sessions against the
// fixture database server. Not part of the test run; the traces are checked in.
//
//   capture_traces <out-dir> <pymysql_client.py>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "graybox/fixture/db_server.hpp"
#include "graybox/fixture/web_app.hpp"
#include "graybox/mysql/client.hpp"
#include "graybox/mysql/trace.hpp"

using namespace graybox;

namespace {

mysql::ClientOptions options(std::uint16_t port) {
  mysql::ClientOptions o;
  o.endpoint = {"127.0.0.1", port};
  o.password = "app-secret";
  return o;
}

struct Rig {
  explicit Rig(bool refused_caps) {
    fixture::DbServerOptions d;
    d.advertise_refused_caps = refused_caps;
    db = std::make_unique<fixture::DbServer>(d, std::make_shared<fixture::Database>());
    db->start();
    fixture::seed_database(options(db->port()));
    auto c = mysql::Client::connect(options(db->port()));
    c.query("CREATE TABLE notes (id INT, note VARCHAR(64), author CHAR(16))");
    c.query("INSERT INTO notes (id, note, author) VALUES (1, 'first', 'dana'), (2, NULL, 'lee'), (3, '', NULL)");
    c.close();
    tap = std::make_unique<mysql::TraceTap>(Endpoint{"127.0.0.1", 0}, Endpoint{"127.0.0.1", db->port()});
    tap->start();
  }
  ~Rig() {
    tap->stop();
    db->stop();
  }
  mysql::Trace last() const {
    const auto all = tap->traces();
    if (all.empty()) throw std::runtime_error("no trace captured");
    return all.back();
  }

  std::unique_ptr<fixture::DbServer> db;
  std::unique_ptr<mysql::TraceTap> tap;
};

void write(const std::string& path, const mysql::Trace& t, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  out << mysql::serialize_trace(t, comment);
  std::cout << path << ": " << t.size() << " chunks\n";
}

void wait_closed(const Rig& rig, std::size_t n) {
  for (int i = 0; i < 200 && rig.tap->traces().size() < n; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: capture_traces <out-dir> <pymysql_client.py>\n";
    return 2;
  }
  const std::string dir = argv[1];
  const std::string script = argv[2];
  {
    Rig rig(false);
    auto c = mysql::Client::connect(options(rig.tap->port()));
    c.query("SELECT `topic` FROM `sessions` WHERE id=1");
    c.query("SELECT slot, body FROM snippets WHERE slot = 'htmltext'");
    c.query("SELECT id, note, author FROM notes");
    c.query("SET NAMES utf8mb4");
    c.close();
    wait_closed(rig, 1);
    write(dir + "/classic_eof_session.jsonl", rig.last(),
          "graybox client, classic EOF terminators\n"
          "queries: sessions topic, one snippets row, notes with NULL and empty cells, SET");
  }
  {
    Rig rig(false);
    auto o = options(rig.tap->port());
    o.request_deprecate_eof = true;
    o.multi_statements = true;
    auto c = mysql::Client::connect(o);
    c.query("SELECT name, value FROM settings ORDER BY name; SELECT lang FROM locale");
    c.ping();
    try {
      c.query("SELECT x FROM missing_table");
    } catch (const mysql::ServerError&) {
    }
    c.query("SELECT id, note, author FROM notes WHERE id = 2");
    c.close();
    wait_closed(rig, 1);
    write(dir + "/deprecate_eof_multi.jsonl", rig.last(),
          "graybox client, CLIENT_DEPRECATE_EOF and multi-statements\n"
          "queries: two-statement batch, ping, failing query, NULL cell");
  }
  {
    Rig rig(false);
    const auto cmd = "python3 " + script + " --port " + std::to_string(rig.tap->port()) +
                     " --sql \"SELECT topic FROM sessions WHERE id = 1\" --sql \"SELECT id, name, role FROM users\"" +
                     " --sql \"SELECT service FROM api_keys\"";
    if (std::system(cmd.c_str()) != 0) {
      std::cerr << "pymysql session failed\n";
      return 1;
    }
    wait_closed(rig, 1);
    write(dir + "/pymysql_session.jsonl", rig.last(),
          "PyMySQL client session\nqueries: sessions topic, users, api_keys services");
  }
  {
    Rig rig(true);
    auto c = mysql::Client::connect(options(rig.tap->port()));
    c.query("SELECT title FROM pages");
    c.close();
    wait_closed(rig, 1);
    write(dir + "/refused_caps_greeting.jsonl", rig.last(),
          "server greeting advertises SSL and compression\nquery: pages titles");
  }
  return 0;
}
