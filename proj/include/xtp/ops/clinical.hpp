#pragma once

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xtp/sql/store.hpp"
#include "xtp/value.hpp"

namespace xtp::ops {

// ---- schema ----------------------------------------------------------------

struct SchemaError {
    std::string kind;  // missing_pk | multiple_pk | dangling_fk | duplicate_table | duplicate_column
    std::string detail;
    bool operator==(const SchemaError&) const = default;
};

// Referential-integrity check over a schema; empty result iff every table has
// exactly one primary key, names are unique, and each foreign key names an
// existing table's primary key.
std::vector<SchemaError> schema_validate(const sql::RelSchema& schema);

// Parses the textual schema listing used by the extraction stage, one table
// per line:
//   pt: id: int [PK], name: string, mrn: string
//   adm: id: int [PK], p_id: int [FK -> pt(id)]
// The arrow may be "->" or the typographic form.
sql::RelSchema parse_schema_text(const std::string& text);

nlohmann::json schema_to_json(const sql::RelSchema& schema);
sql::RelSchema schema_from_json(const nlohmann::json& j);

// ---- triplets ---------------------------------------------------------------

struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;
    SourceSpan span;  // the matched region in the source document
    bool operator==(const Triplet&) const = default;
};

// Rule-based (subject, predicate, object) extraction over clinical-note text.
// A fixed pattern set: patient/MRN mentions, "diagnosed with", prescription
// verbs, brand and dose attributes. Subjects are attributed to the nearest
// preceding patient mention.
std::vector<Triplet> extract_triplets(const std::string& text,
                                      const std::string& source_id);

nlohmann::json triplets_to_json(const std::vector<Triplet>& triplets);
std::vector<Triplet> triplets_from_json(const nlohmann::json& j);

// ---- SQL emission -----------------------------------------------------------

struct TableRow {
    std::string table;
    std::vector<sql::Scalar> values;
    bool operator==(const TableRow&) const = default;
};

// CREATE TABLE statements in foreign-key dependency order, then one INSERT
// per row in input order. Executing the result on a fresh store reproduces
// the rows exactly. Throws xtp::sql::ExecError on arity or type mismatches
// and std::invalid_argument on a foreign-key cycle.
std::vector<sql::SqlStmt> extract_sql(const sql::RelSchema& schema,
                                      const std::vector<TableRow>& rows);

// ---- de-identification ------------------------------------------------------

struct DeidentifyResult {
    std::string view_name;
    std::set<std::string> deleted_values;  // distinct values of dropped columns
};

// Registers a view projecting `keep_cols` and reports every distinct scalar
// value of the dropped columns so the projection guard can block resurfacing.
DeidentifyResult deidentify(sql::Store& store, const std::string& table,
                            const std::vector<std::string>& keep_cols,
                            const std::string& view_name);

}  // namespace xtp::ops
