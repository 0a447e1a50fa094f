#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "xtp/sql/ast.hpp"

namespace xtp::sql {

struct ParseError : std::runtime_error {
    ParseError(std::size_t offset, std::vector<std::string> expected,
               std::string found);
    std::size_t offset;                  // byte offset into the input
    std::vector<std::string> expected;   // token set the parser would accept
    std::string found;
};

// Parses one or more `;`-terminated statements. Keywords are
// case-insensitive; identifiers and string literals are case-sensitive.
std::vector<SqlStmt> parse_sql(const std::string& text);

// Canonical rendering: uppercase keywords, single spaces, `, ` separators,
// single-quoted strings with '' escaping, trailing `;`.
// parse_sql(print_sql(s)) == {s} for every well-formed statement.
std::string print_sql(const SqlStmt& stmt);

}  // namespace xtp::sql
