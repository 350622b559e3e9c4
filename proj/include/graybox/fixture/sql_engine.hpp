#pragma once

// In-memory table store with a tiny SQL dialect, enough to back the fixture
// application:
//
//   CREATE TABLE [IF NOT EXISTS] t (col INT|VARCHAR(n)|CHAR(n)|TEXT [...], ...)
//   DROP TABLE [IF EXISTS] t
//   INSERT INTO t [(cols)] VALUES (...), (...)
//   SELECT cols|* FROM t [WHERE col = lit [AND ...]] [ORDER BY col [ASC|DESC]] [LIMIT n]
//   SELECT lit [AS name], ...            (no table: derived columns)
//   SET / USE / BEGIN / COMMIT / ROLLBACK -> OK

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "graybox/bytes.hpp"
#include "graybox/mysql/protocol.hpp"

namespace graybox::fixture {

class SqlError : public std::runtime_error {
 public:
  SqlError(std::uint16_t code, const std::string& message) : std::runtime_error(message), code_(code) {}
  std::uint16_t code() const { return code_; }

 private:
  std::uint16_t code_;
};

enum class SqlType { Int, VarChar, Char, Text };

struct ColumnSchema {
  std::string name;
  SqlType type = SqlType::VarChar;
  std::uint32_t length = 255;
};

struct Table {
  std::vector<ColumnSchema> columns;
  std::vector<std::vector<std::optional<Bytes>>> rows;
};

/// Column metadata as sent on the wire for a result set.
mysql::ColumnDefinition wire_column(const std::string& schema, const std::string& table, const ColumnSchema& column,
                                    const std::string& alias);

struct StatementResult {
  bool has_rows = false;
  std::vector<mysql::ColumnDefinition> columns;
  std::vector<mysql::TextRow> rows;
  std::uint64_t affected_rows = 0;
};

class Database {
 public:
  explicit Database(std::string schema = "fixture") : schema_(std::move(schema)) {}

  /// Executes one statement. Throws SqlError.
  StatementResult execute(std::string_view sql);
  /// Splits on top-level ';' and executes each non-empty statement.
  std::vector<StatementResult> execute_script(std::string_view sql);

  std::size_t row_count(const std::string& table) const;
  std::vector<std::string> table_names() const;
  const std::string& schema() const { return schema_; }

 private:
  std::string schema_;
  mutable std::mutex mutex_;
  std::map<std::string, Table> tables_;
};

std::vector<std::string> split_statements(std::string_view sql);

}  // namespace graybox::fixture
