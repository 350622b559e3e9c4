#include "graybox/fixture/sql_engine.hpp"

#include <algorithm>
#include <charconv>

namespace graybox::fixture {

namespace {

constexpr std::uint16_t kErrSyntax = 1064;
constexpr std::uint16_t kErrNoSuchTable = 1146;
constexpr std::uint16_t kErrTableExists = 1050;
constexpr std::uint16_t kErrBadField = 1054;
constexpr std::uint16_t kErrColumnCount = 1136;

enum class Tok { Ident, QuotedIdent, String, Number, Symbol, Variable, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
};

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto syntax = [&](const std::string& what) { throw SqlError(kErrSyntax, "syntax error near '" + what + "'"); };
  while (i < sql.size()) {
    const char c = sql[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
    } else if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      while (i < sql.size() && sql[i] != '\n') ++i;
    } else if (c == '`') {
      const auto end = sql.find('`', i + 1);
      if (end == std::string_view::npos) syntax(std::string(sql.substr(i)));
      out.push_back({Tok::QuotedIdent, std::string(sql.substr(i + 1, end - i - 1))});
      i = end + 1;
    } else if (c == '\'' || c == '"') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < sql.size()) {
        const char d = sql[i];
        if (d == '\\' && i + 1 < sql.size()) {
          const char e = sql[i + 1];
          switch (e) {
            case 'n': value.push_back('\n'); break;
            case 't': value.push_back('\t'); break;
            case 'r': value.push_back('\r'); break;
            case '0': value.push_back('\0'); break;
            case 'Z': value.push_back('\x1a'); break;
            default: value.push_back(e); break;
          }
          i += 2;
        } else if (d == c) {
          if (i + 1 < sql.size() && sql[i + 1] == c) {
            value.push_back(c);
            i += 2;
          } else {
            ++i;
            closed = true;
            break;
          }
        } else {
          value.push_back(d);
          ++i;
        }
      }
      if (!closed) syntax("unterminated string");
      out.push_back({Tok::String, std::move(value)});
    } else if (is_ascii_digit(static_cast<unsigned char>(c)) ||
               (c == '-' && i + 1 < sql.size() && is_ascii_digit(static_cast<unsigned char>(sql[i + 1])))) {
      std::size_t j = i + 1;
      while (j < sql.size() && (is_ascii_digit(static_cast<unsigned char>(sql[j])) || sql[j] == '.')) ++j;
      out.push_back({Tok::Number, std::string(sql.substr(i, j - i))});
      i = j;
    } else if (c == '@' && i + 1 < sql.size() && sql[i + 1] == '@') {
      std::size_t j = i + 2;
      while (j < sql.size() && (is_ascii_alnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_' || sql[j] == '.')) ++j;
      out.push_back({Tok::Variable, std::string(sql.substr(i, j - i))});
      i = j;
    } else if (is_ascii_alpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i + 1;
      while (j < sql.size() && (is_ascii_alnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_' || sql[j] == '$')) ++j;
      out.push_back({Tok::Ident, std::string(sql.substr(i, j - i))});
      i = j;
    } else if ((c == '!' || c == '<') && i + 1 < sql.size() && (sql[i + 1] == '=' || sql[i + 1] == '>')) {
      out.push_back({Tok::Symbol, "!="});
      i += 2;
    } else if (std::string_view("(),;=*.").find(c) != std::string_view::npos) {
      out.push_back({Tok::Symbol, std::string(1, c)});
      ++i;
    } else {
      syntax(std::string(1, c));
    }
  }
  out.push_back({Tok::End, ""});
  return out;
}

struct Literal {
  std::optional<Bytes> value;
  bool numeric = false;
};

struct SelectItem {
  enum class Kind { Star, Column, Literal, Variable } kind = Kind::Column;
  std::string name;
  Literal literal;
  std::optional<std::string> alias;
};

struct Condition {
  std::string column;
  bool equal = true;
  Literal literal;
};

long long to_int(const std::optional<Bytes>& v) {
  if (!v) return 0;
  long long out = 0;
  std::from_chars(v->data(), v->data() + v->size(), out);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  const Token& peek() const { return tokens_[pos_]; }
  Token take() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool keyword(std::string_view kw) {
    if (peek().kind == Tok::Ident && iequals_ascii(peek().text, kw)) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_keyword(std::string_view kw) {
    if (!keyword(kw)) fail();
  }
  bool symbol(std::string_view s) {
    if (peek().kind == Tok::Symbol && peek().text == s) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect_symbol(std::string_view s) {
    if (!symbol(s)) fail();
  }
  std::string identifier() {
    if (peek().kind != Tok::Ident && peek().kind != Tok::QuotedIdent) fail();
    return take().text;
  }
  Literal literal() {
    const auto t = take();
    if (t.kind == Tok::String) return Literal{t.text, false};
    if (t.kind == Tok::Number) return Literal{t.text, true};
    if (t.kind == Tok::Ident && iequals_ascii(t.text, "NULL")) return Literal{std::nullopt, false};
    --pos_;
    fail();
  }
  bool at_end() {
    symbol(";");
    return peek().kind == Tok::End;
  }
  [[noreturn]] void fail() const {
    throw SqlError(kErrSyntax, "You have an error in your SQL syntax near '" + peek().text + "'");
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

const ColumnSchema* find_column(const Table& table, std::string_view name, std::size_t* index = nullptr) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (iequals_ascii(table.columns[i].name, name)) {
      if (index) *index = i;
      return &table.columns[i];
    }
  }
  return nullptr;
}

std::optional<Bytes> coerce(const ColumnSchema& column, const Literal& lit) {
  if (!lit.value) return std::nullopt;
  if (column.type == SqlType::Int) return std::to_string(to_int(lit.value));
  return lit.value;
}

bool condition_holds(const ColumnSchema& column, const std::optional<Bytes>& cell, const Condition& cond) {
  if (!cell || !cond.literal.value) return false;
  bool eq;
  if (column.type == SqlType::Int) {
    eq = to_int(cell) == to_int(cond.literal.value);
  } else {
    eq = *cell == *cond.literal.value;
  }
  return cond.equal ? eq : !eq;
}

}  // namespace

mysql::ColumnDefinition wire_column(const std::string& schema, const std::string& table, const ColumnSchema& column,
                                    const std::string& alias) {
  mysql::ColumnDefinition def;
  def.schema = schema;
  def.table = table;
  def.org_table = table;
  def.name = alias.empty() ? column.name : alias;
  def.org_name = column.name;
  switch (column.type) {
    case SqlType::Int:
      def.type = static_cast<std::uint8_t>(mysql::ColumnType::Long);
      def.charset = 63;
      def.column_length = 11;
      def.flags = 0x8000;
      break;
    case SqlType::VarChar:
      def.type = static_cast<std::uint8_t>(mysql::ColumnType::VarString);
      def.column_length = column.length * 4;
      break;
    case SqlType::Char:
      def.type = static_cast<std::uint8_t>(mysql::ColumnType::String);
      def.column_length = column.length * 4;
      break;
    case SqlType::Text:
      def.type = static_cast<std::uint8_t>(mysql::ColumnType::Blob);
      def.column_length = 262140;
      def.flags = 0x0010;
      break;
  }
  return def;
}

std::vector<std::string> split_statements(std::string_view sql) {
  std::vector<std::string> out;
  std::string current;
  char quote = 0;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    const char c = sql[i];
    if (quote) {
      current.push_back(c);
      if (c == '\\' && i + 1 < sql.size()) {
        current.push_back(sql[++i]);
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '\'' || c == '"' || c == '`') {
      quote = c;
      current.push_back(c);
    } else if (c == ';') {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  out.push_back(current);
  std::erase_if(out, [](const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r'; });
  });
  return out;
}

std::vector<StatementResult> Database::execute_script(std::string_view sql) {
  std::vector<StatementResult> out;
  for (const auto& stmt : split_statements(sql)) out.push_back(execute(stmt));
  return out;
}

StatementResult Database::execute(std::string_view sql) {
  Parser p(tokenize(sql));
  StatementResult result;
  std::lock_guard lock(mutex_);

  if (p.keyword("SET") || p.keyword("USE") || p.keyword("BEGIN") || p.keyword("COMMIT") || p.keyword("ROLLBACK") ||
      p.keyword("START")) {
    return result;
  }

  if (p.keyword("DROP")) {
    p.expect_keyword("TABLE");
    bool if_exists = false;
    if (p.keyword("IF")) {
      p.expect_keyword("EXISTS");
      if_exists = true;
    }
    const auto name = p.identifier();
    if (!tables_.erase(name) && !if_exists) throw SqlError(kErrNoSuchTable, "Unknown table '" + name + "'");
    return result;
  }

  if (p.keyword("CREATE")) {
    p.expect_keyword("TABLE");
    bool if_not_exists = false;
    if (p.keyword("IF")) {
      p.expect_keyword("NOT");
      p.expect_keyword("EXISTS");
      if_not_exists = true;
    }
    const auto name = p.identifier();
    Table table;
    p.expect_symbol("(");
    for (;;) {
      if (p.keyword("PRIMARY") || p.keyword("KEY") || p.keyword("UNIQUE") || p.keyword("INDEX")) {
        int depth = 0;
        while (!(depth == 0 && (p.peek().text == "," || p.peek().text == ")")) && p.peek().kind != Tok::End) {
          const auto t = p.take();
          if (t.text == "(") ++depth;
          if (t.text == ")") --depth;
        }
      } else {
        ColumnSchema col;
        col.name = p.identifier();
        const auto type = to_lower_ascii(p.identifier());
        if (type == "int" || type == "integer" || type == "bigint" || type == "smallint" || type == "tinyint") {
          col.type = SqlType::Int;
          col.length = 11;
        } else if (type == "varchar") {
          col.type = SqlType::VarChar;
        } else if (type == "char") {
          col.type = SqlType::Char;
          col.length = 1;
        } else if (type == "text" || type == "tinytext" || type == "mediumtext" || type == "longtext") {
          col.type = SqlType::Text;
        } else {
          throw SqlError(kErrSyntax, "unsupported column type '" + type + "'");
        }
        if (p.symbol("(")) {
          const auto len = p.literal();
          col.length = static_cast<std::uint32_t>(to_int(len.value));
          p.expect_symbol(")");
        }
        // Column attributes (NOT NULL, DEFAULT x, PRIMARY KEY, ...) are accepted and ignored.
        while (p.peek().text != "," && p.peek().text != ")" && p.peek().kind != Tok::End) p.take();
        table.columns.push_back(std::move(col));
      }
      if (p.symbol(",")) continue;
      p.expect_symbol(")");
      break;
    }
    if (tables_.contains(name)) {
      if (if_not_exists) return result;
      throw SqlError(kErrTableExists, "Table '" + name + "' already exists");
    }
    tables_[name] = std::move(table);
    return result;
  }

  if (p.keyword("INSERT")) {
    p.expect_keyword("INTO");
    const auto name = p.identifier();
    auto it = tables_.find(name);
    if (it == tables_.end()) throw SqlError(kErrNoSuchTable, "Table '" + schema_ + "." + name + "' doesn't exist");
    Table& table = it->second;
    std::vector<std::size_t> targets;
    if (p.symbol("(")) {
      do {
        const auto col = p.identifier();
        std::size_t idx = 0;
        if (!find_column(table, col, &idx)) throw SqlError(kErrBadField, "Unknown column '" + col + "'");
        targets.push_back(idx);
      } while (p.symbol(","));
      p.expect_symbol(")");
    } else {
      for (std::size_t i = 0; i < table.columns.size(); ++i) targets.push_back(i);
    }
    p.expect_keyword("VALUES");
    do {
      p.expect_symbol("(");
      std::vector<Literal> values;
      do {
        values.push_back(p.literal());
      } while (p.symbol(","));
      p.expect_symbol(")");
      if (values.size() != targets.size()) throw SqlError(kErrColumnCount, "Column count doesn't match value count");
      std::vector<std::optional<Bytes>> row(table.columns.size());
      for (std::size_t i = 0; i < targets.size(); ++i) row[targets[i]] = coerce(table.columns[targets[i]], values[i]);
      table.rows.push_back(std::move(row));
      ++result.affected_rows;
    } while (p.symbol(","));
    if (!p.at_end()) p.fail();
    return result;
  }

  if (!p.keyword("SELECT")) p.fail();
  std::vector<SelectItem> items;
  do {
    SelectItem item;
    if (p.symbol("*")) {
      item.kind = SelectItem::Kind::Star;
    } else if (p.peek().kind == Tok::String || p.peek().kind == Tok::Number) {
      item.kind = SelectItem::Kind::Literal;
      item.literal = p.literal();
    } else if (p.peek().kind == Tok::Variable) {
      item.kind = SelectItem::Kind::Variable;
      item.name = p.take().text;
    } else {
      item.kind = SelectItem::Kind::Column;
      item.name = p.identifier();
    }
    if (p.keyword("AS")) item.alias = p.identifier();
    items.push_back(std::move(item));
  } while (p.symbol(","));

  const Table* table = nullptr;
  std::string table_name;
  std::vector<Condition> conditions;
  std::optional<std::pair<std::size_t, bool>> order;
  std::optional<std::size_t> limit;
  if (p.keyword("FROM")) {
    table_name = p.identifier();
    auto it = tables_.find(table_name);
    if (it == tables_.end()) throw SqlError(kErrNoSuchTable, "Table '" + schema_ + "." + table_name + "' doesn't exist");
    table = &it->second;
    if (p.keyword("WHERE")) {
      do {
        Condition cond;
        cond.column = p.identifier();
        if (p.symbol("=")) {
          cond.equal = true;
        } else if (p.symbol("!=")) {
          cond.equal = false;
        } else {
          p.fail();
        }
        cond.literal = p.literal();
        if (!find_column(*table, cond.column)) throw SqlError(kErrBadField, "Unknown column '" + cond.column + "'");
        conditions.push_back(std::move(cond));
      } while (p.keyword("AND"));
    }
    if (p.keyword("ORDER")) {
      p.expect_keyword("BY");
      const auto col = p.identifier();
      std::size_t idx = 0;
      if (!find_column(*table, col, &idx)) throw SqlError(kErrBadField, "Unknown column '" + col + "'");
      bool desc = false;
      if (p.keyword("DESC")) {
        desc = true;
      } else {
        p.keyword("ASC");
      }
      order = std::make_pair(idx, desc);
    }
  }
  if (p.keyword("LIMIT")) limit = static_cast<std::size_t>(to_int(p.literal().value));
  if (!p.at_end()) p.fail();

  // Resolve projections.
  struct Projection {
    std::optional<std::size_t> column_index;
    std::optional<Bytes> constant;
  };
  std::vector<Projection> projections;
  result.has_rows = true;
  for (const auto& item : items) {
    switch (item.kind) {
      case SelectItem::Kind::Star:
        if (!table) p.fail();
        for (std::size_t i = 0; i < table->columns.size(); ++i) {
          result.columns.push_back(wire_column(schema_, table_name, table->columns[i], ""));
          projections.push_back({i, std::nullopt});
        }
        break;
      case SelectItem::Kind::Column: {
        std::size_t idx = 0;
        if (!table || !find_column(*table, item.name, &idx)) {
          throw SqlError(kErrBadField, "Unknown column '" + item.name + "' in 'field list'");
        }
        result.columns.push_back(wire_column(schema_, table_name, table->columns[idx], item.alias.value_or("")));
        projections.push_back({idx, std::nullopt});
        break;
      }
      case SelectItem::Kind::Literal:
      case SelectItem::Kind::Variable: {
        ColumnSchema derived;
        Bytes value;
        if (item.kind == SelectItem::Kind::Variable) {
          derived.name = item.name;
          value = iequals_ascii(item.name, "@@version_comment") ? "graybox fixture" : "";
          derived.type = SqlType::VarChar;
        } else {
          derived.name = item.literal.value.value_or("NULL");
          value = item.literal.value.value_or("");
          derived.type = item.literal.numeric ? SqlType::Int : SqlType::VarChar;
          derived.length = static_cast<std::uint32_t>(value.size());
        }
        auto def = wire_column(schema_, "", derived, item.alias.value_or(""));
        def.org_name.clear();
        if (item.literal.numeric) def.type = static_cast<std::uint8_t>(mysql::ColumnType::LongLong);
        result.columns.push_back(std::move(def));
        projections.push_back({std::nullopt, item.kind == SelectItem::Kind::Literal ? item.literal.value
                                                                                    : std::optional<Bytes>(value)});
        break;
      }
    }
  }

  std::vector<const std::vector<std::optional<Bytes>>*> selected;
  if (table) {
    for (const auto& row : table->rows) {
      bool keep = true;
      for (const auto& cond : conditions) {
        std::size_t idx = 0;
        const auto* col = find_column(*table, cond.column, &idx);
        if (!condition_holds(*col, row[idx], cond)) {
          keep = false;
          break;
        }
      }
      if (keep) selected.push_back(&row);
    }
    if (order) {
      const auto [idx, desc] = *order;
      const bool numeric = table->columns[idx].type == SqlType::Int;
      std::stable_sort(selected.begin(), selected.end(), [&](auto* a, auto* b) {
        const auto& x = (*a)[idx];
        const auto& y = (*b)[idx];
        bool less = numeric ? to_int(x) < to_int(y) : x.value_or("") < y.value_or("");
        bool greater = numeric ? to_int(y) < to_int(x) : y.value_or("") < x.value_or("");
        return desc ? greater : less;
      });
    }
  }

  const std::size_t row_total = table ? selected.size() : 1;
  const std::size_t row_limit = limit ? std::min(*limit, row_total) : row_total;
  for (std::size_t r = 0; r < row_limit; ++r) {
    mysql::TextRow out;
    for (const auto& proj : projections) {
      if (proj.column_index) {
        out.push_back((*selected[r])[*proj.column_index]);
      } else {
        out.push_back(proj.constant);
      }
    }
    result.rows.push_back(std::move(out));
  }
  return result;
}

std::size_t Database::row_count(const std::string& table) const {
  std::lock_guard lock(mutex_);
  auto it = tables_.find(table);
  return it == tables_.end() ? 0 : it->second.rows.size();
}

std::vector<std::string> Database::table_names() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> names;
  for (const auto& [name, _] : tables_) names.push_back(name);
  return names;
}

}  // namespace graybox::fixture
