#include "xtp/ops/clinical.hpp"

#include <algorithm>
#include <map>
#include <regex>

#include <nlohmann/json.hpp>

namespace xtp::ops {

std::vector<SchemaError> schema_validate(const sql::RelSchema& schema) {
    std::vector<SchemaError> errors;
    std::set<std::string> table_names;
    for (const auto& t : schema.tables) {
        if (!table_names.insert(t.name).second) {
            errors.push_back({"duplicate_table", t.name});
        }
        std::set<std::string> col_names;
        int pks = 0;
        for (const auto& c : t.columns) {
            if (!col_names.insert(c.name).second) {
                errors.push_back({"duplicate_column", t.name + "." + c.name});
            }
            if (c.is_pk) ++pks;
        }
        if (pks == 0) errors.push_back({"missing_pk", t.name});
        if (pks > 1) errors.push_back({"multiple_pk", t.name});
    }
    for (const auto& t : schema.tables) {
        for (const auto& c : t.columns) {
            if (!c.fk) continue;
            const auto* target = schema.find_table(c.fk->table);
            std::string ref = t.name + "." + c.name + " -> " + c.fk->table + "(" +
                              c.fk->column + ")";
            if (!target) {
                errors.push_back({"dangling_fk", ref});
                continue;
            }
            int pk = target->pk_index();
            if (pk < 0 || target->columns[pk].name != c.fk->column) {
                errors.push_back({"dangling_fk", ref});
            }
        }
    }
    return errors;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// "[FK → pt(id)]" or "[FK -> pt(id)]"
const std::regex kFkRe(R"(\[FK\s*(?:->|\xE2\x86\x92)\s*(\w+)\((\w+)\)\])");

sql::ColumnDef parse_coldef(const std::string& text) {
    sql::ColumnDef c;
    auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("malformed column definition: " + text);
    }
    c.name = trim(text.substr(0, colon));
    std::string rest = trim(text.substr(colon + 1));
    if (rest.rfind("int", 0) == 0) {
        c.type = sql::ColType::Int;
        rest = trim(rest.substr(3));
    } else if (rest.rfind("string", 0) == 0) {
        c.type = sql::ColType::Str;
        rest = trim(rest.substr(6));
    } else {
        throw std::invalid_argument("unknown column type in: " + text);
    }
    if (rest.find("[PK]") != std::string::npos) c.is_pk = true;
    std::smatch m;
    if (std::regex_search(rest, m, kFkRe)) {
        c.fk = sql::ForeignKey{m[1].str(), m[2].str()};
    }
    return c;
}

}  // namespace

sql::RelSchema parse_schema_text(const std::string& text) {
    sql::RelSchema schema;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string line = trim(text.substr(pos, nl == std::string::npos
                                                     ? std::string::npos
                                                     : nl - pos));
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        if (line.empty()) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw std::invalid_argument("malformed schema line: " + line);
        }
        sql::TableDef table;
        table.name = trim(line.substr(0, colon));
        std::string cols = line.substr(colon + 1);
        // Columns are comma-separated; FK annotations contain no commas.
        std::size_t start = 0;
        while (start <= cols.size()) {
            auto comma = cols.find(',', start);
            std::string part = cols.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            start = comma == std::string::npos ? cols.size() + 1 : comma + 1;
            if (!trim(part).empty()) table.columns.push_back(parse_coldef(part));
        }
        schema.tables.push_back(std::move(table));
    }
    return schema;
}

nlohmann::json schema_to_json(const sql::RelSchema& schema) {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : schema.tables) {
        nlohmann::json cols = nlohmann::json::array();
        for (const auto& c : t.columns) {
            nlohmann::json jc = {
                {"name", c.name},
                {"type", c.type == sql::ColType::Int ? "int" : "string"},
                {"pk", c.is_pk}};
            if (c.fk) jc["fk"] = {{"table", c.fk->table}, {"column", c.fk->column}};
            cols.push_back(std::move(jc));
        }
        tables.push_back({{"name", t.name}, {"columns", cols}});
    }
    return {{"tables", tables}};
}

sql::RelSchema schema_from_json(const nlohmann::json& j) {
    sql::RelSchema schema;
    for (const auto& jt : j.at("tables")) {
        sql::TableDef t;
        t.name = jt.at("name").get<std::string>();
        for (const auto& jc : jt.at("columns")) {
            sql::ColumnDef c;
            c.name = jc.at("name").get<std::string>();
            c.type = jc.at("type") == "int" ? sql::ColType::Int : sql::ColType::Str;
            c.is_pk = jc.value("pk", false);
            if (jc.contains("fk")) {
                c.fk = sql::ForeignKey{jc["fk"].at("table"), jc["fk"].at("column")};
            }
            t.columns.push_back(std::move(c));
        }
        schema.tables.push_back(std::move(t));
    }
    return schema;
}

// ---- triplets ---------------------------------------------------------------

namespace {

struct Mention {
    std::size_t offset;
    std::size_t length;
    enum Kind { Patient, Name, Diagnosed, Presumed, Prescribed, Brand, Dose } kind;
    std::string a;
    std::string b;
};

void collect(std::vector<Mention>& out, const std::string& text,
             const std::regex& re, Mention::Kind kind, int group_a, int group_b) {
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re);
         it != std::sregex_iterator(); ++it) {
        Mention m;
        m.offset = static_cast<std::size_t>(it->position(0));
        m.length = static_cast<std::size_t>(it->length(0));
        m.kind = kind;
        m.a = group_a >= 0 ? it->str(group_a) : "";
        m.b = group_b >= 0 ? it->str(group_b) : "";
        out.push_back(std::move(m));
    }
}

const std::string kName = R"([A-Z][A-Za-z]*(?:\s+[A-Z][A-Za-z]*\.?)+)";

}  // namespace

std::vector<Triplet> extract_triplets(const std::string& text,
                                      const std::string& source_id) {
    static const std::regex patient_re("Patient\\s+(" + kName + ")\\s*\\(MRN\\s+(\\d+)\\)");
    static const std::regex name_re("\\b(" + kName + ")\\s+(?:returned|reported)");
    static const std::regex diagnosed_re(R"(diagnosed with\s+(\w+))");
    static const std::regex presumed_re(R"(for presumed\s+(\w+))");
    static const std::regex prescribed_re(R"((?:Prescribed|Started on|repeated)\s+([A-Z][A-Za-z]+))");
    static const std::regex brand_re(R"(Brand:\s*([A-Za-z]+))");
    static const std::regex dose_re(R"(([A-Z][A-Za-z]+)\s+(\d+)mg)");

    std::vector<Mention> mentions;
    collect(mentions, text, patient_re, Mention::Patient, 1, 2);
    collect(mentions, text, name_re, Mention::Name, 1, -1);
    collect(mentions, text, diagnosed_re, Mention::Diagnosed, 1, -1);
    collect(mentions, text, presumed_re, Mention::Presumed, 1, -1);
    collect(mentions, text, prescribed_re, Mention::Prescribed, 1, -1);
    collect(mentions, text, brand_re, Mention::Brand, 1, -1);
    collect(mentions, text, dose_re, Mention::Dose, 1, 2);
    std::stable_sort(mentions.begin(), mentions.end(),
                     [](const Mention& x, const Mention& y) {
                         return x.offset < y.offset;
                     });

    std::vector<Triplet> triplets;
    std::string current_patient;
    std::string last_drug;
    auto span = [&](const Mention& m) {
        return SourceSpan{source_id, m.offset, m.offset + m.length};
    };
    for (const auto& m : mentions) {
        switch (m.kind) {
            case Mention::Patient:
                current_patient = m.a;
                triplets.push_back({m.a, "mrn", m.b, span(m)});
                break;
            case Mention::Name:
                current_patient = m.a;
                break;
            case Mention::Diagnosed:
            case Mention::Presumed:
                if (!current_patient.empty()) {
                    triplets.push_back({current_patient, "diagnosis", m.a, span(m)});
                }
                break;
            case Mention::Prescribed:
                if (!current_patient.empty()) {
                    triplets.push_back({current_patient, "prescribed", m.a, span(m)});
                }
                last_drug = m.a;
                break;
            case Mention::Brand:
                if (!last_drug.empty()) {
                    triplets.push_back({last_drug, "brand", m.a, span(m)});
                }
                break;
            case Mention::Dose:
                triplets.push_back({m.a, "dose_mg", m.b, span(m)});
                break;
        }
    }
    return triplets;
}

nlohmann::json triplets_to_json(const std::vector<Triplet>& triplets) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : triplets) {
        out.push_back({{"s", t.subject},
                       {"p", t.predicate},
                       {"o", t.object},
                       {"span", {t.span.source_id, t.span.start, t.span.end}}});
    }
    return out;
}

std::vector<Triplet> triplets_from_json(const nlohmann::json& j) {
    std::vector<Triplet> out;
    for (const auto& jt : j) {
        Triplet t;
        t.subject = jt.at("s").get<std::string>();
        t.predicate = jt.at("p").get<std::string>();
        t.object = jt.at("o").get<std::string>();
        const auto& js = jt.at("span");
        t.span = {js.at(0).get<std::string>(), js.at(1).get<std::uint64_t>(),
                  js.at(2).get<std::uint64_t>()};
        out.push_back(std::move(t));
    }
    return out;
}

// ---- SQL emission -----------------------------------------------------------

std::vector<sql::SqlStmt> extract_sql(const sql::RelSchema& schema,
                                      const std::vector<TableRow>& rows) {
    // Kahn's algorithm over FK edges, preserving declaration order.
    std::map<std::string, int> indegree;
    for (const auto& t : schema.tables) indegree[t.name] = 0;
    for (const auto& t : schema.tables) {
        for (const auto& c : t.columns) {
            if (c.fk && indegree.count(c.fk->table) && c.fk->table != t.name) {
                ++indegree[t.name];
            }
        }
    }
    std::vector<sql::SqlStmt> stmts;
    std::set<std::string> emitted;
    while (emitted.size() < schema.tables.size()) {
        bool progressed = false;
        for (const auto& t : schema.tables) {
            if (emitted.count(t.name) || indegree[t.name] != 0) continue;
            stmts.push_back(sql::CreateTable{t});
            emitted.insert(t.name);
            progressed = true;
            for (const auto& other : schema.tables) {
                if (emitted.count(other.name)) continue;
                for (const auto& c : other.columns) {
                    if (c.fk && c.fk->table == t.name && c.fk->table != other.name) {
                        --indegree[other.name];
                    }
                }
            }
        }
        if (!progressed) {
            throw std::invalid_argument("foreign-key cycle in schema");
        }
    }

    for (const auto& row : rows) {
        const auto* def = schema.find_table(row.table);
        if (!def) throw sql::ExecError("row for unknown table: " + row.table);
        if (row.values.size() != def->columns.size()) {
            throw sql::ExecError("arity mismatch for table " + row.table);
        }
        for (std::size_t i = 0; i < row.values.size(); ++i) {
            const auto& v = row.values[i];
            if (sql::scalar_is_null(v)) continue;
            bool is_int = std::holds_alternative<std::int64_t>(v);
            if ((def->columns[i].type == sql::ColType::Int) != is_int) {
                throw sql::ExecError("type mismatch for " + row.table + "." +
                                     def->columns[i].name);
            }
        }
        stmts.push_back(sql::InsertValues{row.table, row.values});
    }
    return stmts;
}

DeidentifyResult deidentify(sql::Store& store, const std::string& table,
                            const std::vector<std::string>& keep_cols,
                            const std::string& view_name) {
    const auto& def = store.table_def(table);
    for (const auto& k : keep_cols) {
        if (!def.find_column(k)) {
            throw sql::ExecError("unknown column " + table + "." + k);
        }
    }
    sql::SelectQuery q;
    q.from = table;
    for (const auto& k : keep_cols) q.columns.push_back({std::nullopt, k});
    store.execute(sql::CreateViewSelect{view_name, q});

    DeidentifyResult result;
    result.view_name = view_name;
    const auto& rows = store.table_rows(table);
    for (std::size_t i = 0; i < def.columns.size(); ++i) {
        if (std::find(keep_cols.begin(), keep_cols.end(), def.columns[i].name) !=
            keep_cols.end()) {
            continue;
        }
        for (const auto& row : rows.rows) {
            if (!sql::scalar_is_null(row[i])) {
                result.deleted_values.insert(sql::scalar_to_string(row[i]));
            }
        }
    }
    return result;
}

}  // namespace xtp::ops
