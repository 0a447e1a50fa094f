#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace xtp::sql {

// NULL | INT | STRING
using Scalar = std::variant<std::monostate, std::int64_t, std::string>;

bool scalar_is_null(const Scalar& s);
std::string scalar_to_string(const Scalar& s);  // display form, unquoted

enum class ColType { Int, Str };

struct ForeignKey {
    std::string table;
    std::string column;
    bool operator==(const ForeignKey&) const = default;
};

struct ColumnDef {
    std::string name;
    ColType type = ColType::Str;
    bool is_pk = false;
    std::optional<ForeignKey> fk;
    bool operator==(const ColumnDef&) const = default;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;
    bool operator==(const TableDef&) const = default;

    const ColumnDef* find_column(const std::string& name) const;
    int pk_index() const;  // -1 when the table has no single pk
};

struct RelSchema {
    std::vector<TableDef> tables;
    bool operator==(const RelSchema&) const = default;

    const TableDef* find_table(const std::string& name) const;
};

// Materialized row set. Column order is significant; every row has the same
// arity as `columns`.
struct Relation {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Scalar>> rows;
    bool operator==(const Relation&) const = default;
};

// ---- statements ------------------------------------------------------------

// Optionally qualified column reference (`t.c` or `c`).
struct ColRef {
    std::optional<std::string> table;
    std::string column;
    bool operator==(const ColRef&) const = default;
    std::string str() const { return table ? *table + "." + column : column; }
};

struct CreateTable {
    TableDef def;
    bool operator==(const CreateTable&) const = default;
};

struct InsertValues {
    std::string table;
    std::vector<Scalar> values;
    bool operator==(const InsertValues&) const = default;
};

struct UpdateSetWhereIn {
    std::string table;
    std::string set_column;
    Scalar set_value;
    std::string where_column;
    std::vector<Scalar> in_values;
    bool operator==(const UpdateSetWhereIn&) const = default;
};

struct JoinClause {
    std::string table;
    ColRef left;
    ColRef right;
    bool operator==(const JoinClause&) const = default;
};

struct WherePredicate {
    ColRef column;
    bool is_in = false;           // false: equality against values[0]
    std::vector<Scalar> values;
    bool operator==(const WherePredicate&) const = default;
};

enum class SortDir { Asc, Desc };

struct OrderBy {
    std::string column;  // plain column name or count alias
    SortDir dir = SortDir::Asc;
    bool operator==(const OrderBy&) const = default;
};

struct SelectQuery {
    std::vector<ColRef> columns;         // may be empty when count-only
    bool count_star = false;
    std::optional<std::string> count_alias;
    std::string from;
    std::optional<JoinClause> join;
    std::optional<WherePredicate> where;
    std::vector<ColRef> group_by;
    std::optional<OrderBy> order_by;
    bool operator==(const SelectQuery&) const = default;
};

struct CreateViewSelect {
    std::string view;
    SelectQuery query;
    bool operator==(const CreateViewSelect&) const = default;
};

struct SelectAggregate {
    SelectQuery query;
    bool operator==(const SelectAggregate&) const = default;
};

using SqlStmt = std::variant<CreateTable, InsertValues, UpdateSetWhereIn,
                             CreateViewSelect, SelectAggregate>;

}  // namespace xtp::sql
