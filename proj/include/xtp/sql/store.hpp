#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xtp/sql/ast.hpp"

namespace xtp::sql {

struct ExecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row count for DDL/DML, materialized relation for selects.
using ExecResult = std::variant<std::int64_t, Relation>;

// In-memory relational store for the supported statement subset.
// Single-writer, multi-reader; execute() is not internally synchronized.
// Statements are atomic: on error the store is left unchanged.
class Store {
public:
    ExecResult execute(const SqlStmt& stmt);

    // Convenience: parse and execute every statement in `text`.
    std::vector<ExecResult> execute_script(const std::string& text);

    bool has_table(const std::string& name) const;
    bool has_view(const std::string& name) const;
    const TableDef& table_def(const std::string& name) const;
    const Relation& table_rows(const std::string& name) const;

    // Evaluates a table or view by name. Views are stored queries and read
    // base tables at call time.
    Relation read(const std::string& name) const;

    Relation eval(const SelectQuery& q) const;

    std::vector<std::string> table_names() const;
    std::vector<std::string> view_names() const;

    nlohmann::json to_json() const;
    static Store from_json(const nlohmann::json& j);

private:
    struct TableData {
        TableDef def;
        Relation rows;
    };

    void create_table(const TableDef& def);
    std::int64_t insert(const InsertValues& iv);
    std::int64_t update(const UpdateSetWhereIn& u);
    void create_view(const CreateViewSelect& cv);

    std::map<std::string, TableData> tables_;
    std::map<std::string, SelectQuery> views_;
    std::vector<std::string> table_order_;
};

nlohmann::json scalar_to_json(const Scalar& s);
Scalar scalar_from_json(const nlohmann::json& j);

nlohmann::json relation_to_json(const Relation& r);
Relation relation_from_json(const nlohmann::json& j);

}  // namespace xtp::sql
