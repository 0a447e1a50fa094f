#include "xtp/sql/store.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "xtp/sql/parser.hpp"

namespace xtp::sql {

namespace {

bool type_matches(ColType t, const Scalar& v) {
    if (scalar_is_null(v)) return true;
    if (t == ColType::Int) return std::holds_alternative<std::int64_t>(v);
    return std::holds_alternative<std::string>(v);
}

// NULL sorts first, ints before strings; used for deterministic output order.
int scalar_cmp(const Scalar& a, const Scalar& b) {
    auto rank = [](const Scalar& s) {
        return scalar_is_null(s) ? 0 : (std::holds_alternative<std::int64_t>(s) ? 1 : 2);
    };
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    if (ra == 1) {
        auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
        return x == y ? 0 : (x < y ? -1 : 1);
    }
    if (ra == 2) {
        return std::get<std::string>(a).compare(std::get<std::string>(b));
    }
    return 0;
}

bool scalar_eq(const Scalar& a, const Scalar& b) {
    // NULL never compares equal, including to NULL.
    if (scalar_is_null(a) || scalar_is_null(b)) return false;
    return a == b;
}

// A joined row: values drawn from one or two named sources.
struct EvalSource {
    std::string alias;
    std::vector<std::string> columns;
};

struct EvalEnv {
    std::vector<EvalSource> sources;
    // flat row layout: source 0 columns, then source 1 columns

    std::size_t resolve(const ColRef& ref) const {
        std::size_t base = 0;
        std::size_t found = SIZE_MAX;
        int hits = 0;
        for (const auto& src : sources) {
            for (std::size_t i = 0; i < src.columns.size(); ++i) {
                if (src.columns[i] != ref.column) continue;
                if (ref.table && *ref.table != src.alias) continue;
                ++hits;
                found = base + i;
            }
            base += src.columns.size();
        }
        if (hits == 0) throw ExecError("unknown column: " + ref.str());
        if (hits > 1) throw ExecError("ambiguous column: " + ref.str());
        return found;
    }
};

}  // namespace

bool Store::has_table(const std::string& name) const {
    return tables_.count(name) > 0;
}

bool Store::has_view(const std::string& name) const {
    return views_.count(name) > 0;
}

const TableDef& Store::table_def(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw ExecError("unknown table: " + name);
    return it->second.def;
}

const Relation& Store::table_rows(const std::string& name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) throw ExecError("unknown table: " + name);
    return it->second.rows;
}

std::vector<std::string> Store::table_names() const {
    return table_order_;
}

std::vector<std::string> Store::view_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : views_) out.push_back(name);
    return out;
}

ExecResult Store::execute(const SqlStmt& stmt) {
    if (const auto* ct = std::get_if<CreateTable>(&stmt)) {
        create_table(ct->def);
        return std::int64_t{0};
    }
    if (const auto* iv = std::get_if<InsertValues>(&stmt)) {
        return insert(*iv);
    }
    if (const auto* u = std::get_if<UpdateSetWhereIn>(&stmt)) {
        return update(*u);
    }
    if (const auto* cv = std::get_if<CreateViewSelect>(&stmt)) {
        create_view(*cv);
        return std::int64_t{0};
    }
    return eval(std::get<SelectAggregate>(stmt).query);
}

std::vector<ExecResult> Store::execute_script(const std::string& text) {
    std::vector<ExecResult> out;
    for (const auto& stmt : parse_sql(text)) out.push_back(execute(stmt));
    return out;
}

void Store::create_table(const TableDef& def) {
    if (tables_.count(def.name) || views_.count(def.name)) {
        throw ExecError("duplicate table: " + def.name);
    }
    if (def.columns.empty()) throw ExecError("table with no columns: " + def.name);
    std::set<std::string> names;
    for (const auto& c : def.columns) {
        if (!names.insert(c.name).second) {
            throw ExecError("duplicate column " + c.name + " in " + def.name);
        }
    }
    if (def.pk_index() < 0) {
        throw ExecError("table " + def.name + " must have exactly one primary key");
    }
    for (const auto& c : def.columns) {
        if (!c.fk) continue;
        auto it = tables_.find(c.fk->table);
        if (it == tables_.end()) {
            throw ExecError("foreign key target table missing: " + c.fk->table);
        }
        int pk = it->second.def.pk_index();
        if (pk < 0 || it->second.def.columns[pk].name != c.fk->column) {
            throw ExecError("foreign key must reference the primary key of " +
                            c.fk->table);
        }
    }
    TableData td;
    td.def = def;
    td.rows.name = def.name;
    for (const auto& c : def.columns) td.rows.columns.push_back(c.name);
    tables_.emplace(def.name, std::move(td));
    table_order_.push_back(def.name);
}

std::int64_t Store::insert(const InsertValues& iv) {
    auto it = tables_.find(iv.table);
    if (it == tables_.end()) throw ExecError("unknown table: " + iv.table);
    auto& td = it->second;
    if (iv.values.size() != td.def.columns.size()) {
        throw ExecError("arity mismatch inserting into " + iv.table);
    }
    for (std::size_t i = 0; i < iv.values.size(); ++i) {
        if (!type_matches(td.def.columns[i].type, iv.values[i])) {
            throw ExecError("type mismatch for column " + td.def.columns[i].name);
        }
    }
    int pk = td.def.pk_index();
    const Scalar& key = iv.values[pk];
    if (scalar_is_null(key)) {
        throw ExecError("primary key of " + iv.table + " may not be NULL");
    }
    for (const auto& row : td.rows.rows) {
        if (row[pk] == key) {
            throw ExecError("duplicate primary key " + scalar_to_string(key) +
                            " in " + iv.table);
        }
    }
    for (std::size_t i = 0; i < iv.values.size(); ++i) {
        const auto& col = td.def.columns[i];
        if (!col.fk || scalar_is_null(iv.values[i])) continue;
        const auto& target = tables_.at(col.fk->table);
        int tpk = target.def.pk_index();
        bool found = false;
        for (const auto& row : target.rows.rows) {
            if (row[tpk] == iv.values[i]) { found = true; break; }
        }
        if (!found) {
            throw ExecError("foreign key violation: " + iv.table + "." +
                            col.name + " = " + scalar_to_string(iv.values[i]));
        }
    }
    td.rows.rows.push_back(iv.values);
    return 1;
}

std::int64_t Store::update(const UpdateSetWhereIn& u) {
    auto it = tables_.find(u.table);
    if (it == tables_.end()) throw ExecError("unknown table: " + u.table);
    auto& td = it->second;
    const ColumnDef* set_col = td.def.find_column(u.set_column);
    const ColumnDef* where_col = td.def.find_column(u.where_column);
    if (!set_col) throw ExecError("unknown column: " + u.set_column);
    if (!where_col) throw ExecError("unknown column: " + u.where_column);
    if (!type_matches(set_col->type, u.set_value)) {
        throw ExecError("type mismatch for column " + u.set_column);
    }
    if (set_col->is_pk) throw ExecError("cannot update primary key column");
    std::size_t set_idx = set_col - td.def.columns.data();
    std::size_t where_idx = where_col - td.def.columns.data();
    std::int64_t n = 0;
    for (auto& row : td.rows.rows) {
        bool match = false;
        for (const auto& v : u.in_values) {
            if (scalar_eq(row[where_idx], v)) { match = true; break; }
        }
        if (match) {
            row[set_idx] = u.set_value;
            ++n;
        }
    }
    return n;
}

void Store::create_view(const CreateViewSelect& cv) {
    if (tables_.count(cv.view) || views_.count(cv.view)) {
        throw ExecError("duplicate view: " + cv.view);
    }
    if (!has_table(cv.query.from) && !has_view(cv.query.from)) {
        throw ExecError("unknown table: " + cv.query.from);
    }
    // Validate column references now so errors surface at creation.
    eval(cv.query);
    views_.emplace(cv.view, cv.query);
}

Relation Store::read(const std::string& name) const {
    auto t = tables_.find(name);
    if (t != tables_.end()) return t->second.rows;
    auto v = views_.find(name);
    if (v != views_.end()) {
        Relation r = eval(v->second);
        r.name = name;
        return r;
    }
    throw ExecError("unknown table: " + name);
}

Relation Store::eval(const SelectQuery& q) const {
    Relation left = read(q.from);
    EvalEnv env;
    env.sources.push_back({q.from, left.columns});

    std::vector<std::vector<Scalar>> rows;
    if (q.join) {
        Relation right = read(q.join->table);
        env.sources.push_back({q.join->table, right.columns});
        std::size_t li = env.resolve(q.join->left);
        std::size_t ri = env.resolve(q.join->right);
        for (const auto& lrow : left.rows) {
            for (const auto& rrow : right.rows) {
                std::vector<Scalar> joined = lrow;
                joined.insert(joined.end(), rrow.begin(), rrow.end());
                if (scalar_eq(joined[li], joined[ri])) rows.push_back(std::move(joined));
            }
        }
    } else {
        rows = left.rows;
    }

    if (q.where) {
        std::size_t wi = env.resolve(q.where->column);
        std::vector<std::vector<Scalar>> kept;
        for (auto& row : rows) {
            bool match = false;
            for (const auto& v : q.where->values) {
                if (scalar_eq(row[wi], v)) { match = true; break; }
            }
            if (match) kept.push_back(std::move(row));
        }
        rows = std::move(kept);
    }

    std::vector<std::size_t> proj;
    for (const auto& c : q.columns) proj.push_back(env.resolve(c));

    Relation out;
    for (const auto& c : q.columns) out.columns.push_back(c.column);

    if (!q.count_star) {
        for (const auto& row : rows) {
            std::vector<Scalar> r;
            for (auto i : proj) r.push_back(row[i]);
            out.rows.push_back(std::move(r));
        }
    } else {
        std::string count_name = q.count_alias.value_or("count");
        out.columns.push_back(count_name);

        std::vector<std::size_t> keys;
        if (!q.group_by.empty()) {
            for (const auto& c : q.group_by) keys.push_back(env.resolve(c));
        } else {
            // COUNT(*) alongside columns groups by those columns.
            keys = proj;
        }
        if (q.columns.empty() && keys.empty()) {
            out.rows.push_back({static_cast<std::int64_t>(rows.size())});
        } else {
            // Keyed counting with first-seen order, then sorted below.
            std::vector<std::pair<std::vector<Scalar>, std::int64_t>> groups;
            for (const auto& row : rows) {
                std::vector<Scalar> key;
                for (auto i : keys) key.push_back(row[i]);
                bool found = false;
                for (auto& [gkey, n] : groups) {
                    if (gkey == key) { ++n; found = true; break; }
                }
                if (!found) groups.emplace_back(std::move(key), 1);
            }
            for (const auto& [gkey, n] : groups) {
                std::vector<Scalar> r;
                // Project selected columns out of the group key. Selected
                // columns must be group keys.
                for (auto p : proj) {
                    auto it = std::find(keys.begin(), keys.end(), p);
                    if (it == keys.end()) {
                        throw ExecError("selected column not in GROUP BY");
                    }
                    r.push_back(gkey[it - keys.begin()]);
                }
                r.push_back(n);
                out.rows.push_back(std::move(r));
            }
        }
    }

    if (q.order_by) {
        auto it = std::find(out.columns.begin(), out.columns.end(), q.order_by->column);
        if (it == out.columns.end()) {
            throw ExecError("unknown column in ORDER BY: " + q.order_by->column);
        }
        std::size_t oi = it - out.columns.begin();
        bool desc = q.order_by->dir == SortDir::Desc;
        std::stable_sort(out.rows.begin(), out.rows.end(),
                         [oi, desc](const auto& a, const auto& b) {
                             int c = scalar_cmp(a[oi], b[oi]);
                             return desc ? c > 0 : c < 0;
                         });
    }
    return out;
}

// ---- JSON -------------------------------------------------------------------

nlohmann::json scalar_to_json(const Scalar& s) {
    if (scalar_is_null(s)) return nullptr;
    if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
    return std::get<std::string>(s);
}

Scalar scalar_from_json(const nlohmann::json& j) {
    if (j.is_null()) return std::monostate{};
    if (j.is_number_integer()) return j.get<std::int64_t>();
    return j.get<std::string>();
}

nlohmann::json relation_to_json(const Relation& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& v : row) jr.push_back(scalar_to_json(v));
        rows.push_back(std::move(jr));
    }
    return {{"name", r.name}, {"columns", r.columns}, {"rows", rows}};
}

Relation relation_from_json(const nlohmann::json& j) {
    Relation r;
    r.name = j.value("name", "");
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& jr : j.at("rows")) {
        std::vector<Scalar> row;
        for (const auto& v : jr) row.push_back(scalar_from_json(v));
        r.rows.push_back(std::move(row));
    }
    return r;
}

nlohmann::json Store::to_json() const {
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& name : table_order_) {
        const auto& td = tables_.at(name);
        nlohmann::json cols = nlohmann::json::array();
        for (const auto& c : td.def.columns) {
            nlohmann::json jc = {{"name", c.name},
                                 {"type", c.type == ColType::Int ? "int" : "string"},
                                 {"pk", c.is_pk}};
            if (c.fk) jc["fk"] = {{"table", c.fk->table}, {"column", c.fk->column}};
            cols.push_back(std::move(jc));
        }
        tables.push_back({{"name", name},
                          {"columns", cols},
                          {"rows", relation_to_json(td.rows)["rows"]}});
    }
    nlohmann::json views = nlohmann::json::object();
    for (const auto& [name, query] : views_) {
        views[name] = print_sql(SelectAggregate{query});
    }
    return {{"tables", tables}, {"views", views}};
}

Store Store::from_json(const nlohmann::json& j) {
    Store s;
    for (const auto& jt : j.at("tables")) {
        TableDef def;
        def.name = jt.at("name").get<std::string>();
        for (const auto& jc : jt.at("columns")) {
            ColumnDef c;
            c.name = jc.at("name").get<std::string>();
            c.type = jc.at("type") == "int" ? ColType::Int : ColType::Str;
            c.is_pk = jc.value("pk", false);
            if (jc.contains("fk")) {
                c.fk = ForeignKey{jc["fk"].at("table"), jc["fk"].at("column")};
            }
            def.columns.push_back(std::move(c));
        }
        s.create_table(def);
        auto& td = s.tables_.at(def.name);
        for (const auto& jr : jt.at("rows")) {
            std::vector<Scalar> row;
            for (const auto& v : jr) row.push_back(scalar_from_json(v));
            td.rows.rows.push_back(std::move(row));
        }
    }
    for (const auto& [name, text] : j.at("views").items()) {
        auto stmts = parse_sql(text.get<std::string>());
        s.views_.emplace(name, std::get<SelectAggregate>(stmts.at(0)).query);
    }
    return s;
}

}  // namespace xtp::sql
