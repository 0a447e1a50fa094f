#include "xtp/sql/parser.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace xtp::sql {

bool scalar_is_null(const Scalar& s) {
    return std::holds_alternative<std::monostate>(s);
}

std::string scalar_to_string(const Scalar& s) {
    if (scalar_is_null(s)) return "NULL";
    if (const auto* i = std::get_if<std::int64_t>(&s)) return std::to_string(*i);
    return std::get<std::string>(s);
}

const ColumnDef* TableDef::find_column(const std::string& n) const {
    for (const auto& c : columns) {
        if (c.name == n) return &c;
    }
    return nullptr;
}

int TableDef::pk_index() const {
    int idx = -1;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].is_pk) {
            if (idx >= 0) return -1;  // more than one
            idx = static_cast<int>(i);
        }
    }
    return idx;
}

const TableDef* RelSchema::find_table(const std::string& n) const {
    for (const auto& t : tables) {
        if (t.name == n) return &t;
    }
    return nullptr;
}

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected,
                       std::string found)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "syntax error at byte " << offset << ": expected ";
          for (std::size_t i = 0; i < expected.size(); ++i) {
              os << (i ? " | " : "") << expected[i];
          }
          os << ", found " << found;
          return os.str();
      }()),
      offset(offset),
      expected(std::move(expected)),
      found(std::move(found)) {}

namespace {

enum class Tok { Ident, Int, Str, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;     // ident name / decoded string / punct char
    std::int64_t ival = 0;
    std::size_t offset = 0;

    std::string repr() const {
        switch (kind) {
            case Tok::Ident: return "'" + text + "'";
            case Tok::Int: return "integer " + std::to_string(ival);
            case Tok::Str: return "string literal";
            case Tok::Punct: return "'" + text + "'";
            case Tok::End: return "end of input";
        }
        return "?";
    }
};

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    return s;
}

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        std::size_t i = 0;
        const std::size_t n = text_.size();
        while (i < n) {
            char c = text_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            if (c == '\'') {
                out.push_back(lex_string(i));
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '-' && i + 1 < n &&
                 std::isdigit(static_cast<unsigned char>(text_[i + 1])))) {
                std::size_t start = i;
                if (c == '-') ++i;
                while (i < n && std::isdigit(static_cast<unsigned char>(text_[i]))) ++i;
                Token t{Tok::Int, text_.substr(start, i - start), 0, start};
                t.ival = std::stoll(t.text);
                out.push_back(std::move(t));
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = i;
                while (i < n && (std::isalnum(static_cast<unsigned char>(text_[i])) ||
                                 text_[i] == '_')) {
                    ++i;
                }
                out.push_back({Tok::Ident, text_.substr(start, i - start), 0, start});
                continue;
            }
            static const std::string puncts = "(),;=.*";
            if (puncts.find(c) != std::string::npos) {
                out.push_back({Tok::Punct, std::string(1, c), 0, i});
                ++i;
                continue;
            }
            throw ParseError(i, {"token"}, "'" + std::string(1, c) + "'");
        }
        out.push_back({Tok::End, "", 0, n});
        return out;
    }

private:
    Token lex_string(std::size_t& i) {
        std::size_t start = i;
        ++i;  // opening quote
        std::string value;
        while (true) {
            if (i >= text_.size()) {
                throw ParseError(start, {"closing '"}, "end of input");
            }
            char c = text_[i];
            if (c == '\'') {
                if (i + 1 < text_.size() && text_[i + 1] == '\'') {
                    value += '\'';
                    i += 2;
                    continue;
                }
                ++i;
                break;
            }
            value += c;
            ++i;
        }
        return {Tok::Str, value, 0, start};
    }

    const std::string& text_;
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    std::vector<SqlStmt> run() {
        std::vector<SqlStmt> stmts;
        while (!at_end()) {
            stmts.push_back(statement());
            expect_punct(";");
        }
        return stmts;
    }

private:
    const Token& cur() const { return toks_[pos_]; }
    bool at_end() const { return cur().kind == Tok::End; }
    void advance() { if (!at_end()) ++pos_; }

    bool peek_kw(const std::string& kw) const {
        return cur().kind == Tok::Ident && upper(cur().text) == kw;
    }
    bool accept_kw(const std::string& kw) {
        if (!peek_kw(kw)) return false;
        advance();
        return true;
    }
    void expect_kw(const std::string& kw) {
        if (!accept_kw(kw)) throw ParseError(cur().offset, {kw}, cur().repr());
    }
    bool peek_punct(const std::string& p) const {
        return cur().kind == Tok::Punct && cur().text == p;
    }
    bool accept_punct(const std::string& p) {
        if (!peek_punct(p)) return false;
        advance();
        return true;
    }
    void expect_punct(const std::string& p) {
        if (!accept_punct(p)) throw ParseError(cur().offset, {"'" + p + "'"}, cur().repr());
    }
    std::string expect_name() {
        if (cur().kind != Tok::Ident) {
            throw ParseError(cur().offset, {"identifier"}, cur().repr());
        }
        std::string n = cur().text;
        advance();
        return n;
    }

    Scalar literal() {
        if (cur().kind == Tok::Int) {
            Scalar s = cur().ival;
            advance();
            return s;
        }
        if (cur().kind == Tok::Str) {
            Scalar s = cur().text;
            advance();
            return s;
        }
        if (accept_kw("NULL")) return std::monostate{};
        throw ParseError(cur().offset, {"integer", "string", "NULL"}, cur().repr());
    }

    std::vector<Scalar> literal_list() {
        std::vector<Scalar> vals;
        expect_punct("(");
        vals.push_back(literal());
        while (accept_punct(",")) vals.push_back(literal());
        expect_punct(")");
        return vals;
    }

    ColRef colref() {
        ColRef c;
        c.column = expect_name();
        if (accept_punct(".")) {
            c.table = c.column;
            c.column = expect_name();
        }
        return c;
    }

    SqlStmt statement() {
        if (accept_kw("CREATE")) {
            if (accept_kw("TABLE")) return create_table();
            if (accept_kw("VIEW")) return create_view();
            throw ParseError(cur().offset, {"TABLE", "VIEW"}, cur().repr());
        }
        if (accept_kw("INSERT")) return insert();
        if (accept_kw("UPDATE")) return update();
        if (peek_kw("SELECT")) return SelectAggregate{select()};
        throw ParseError(cur().offset,
                         {"CREATE", "INSERT", "UPDATE", "SELECT"}, cur().repr());
    }

    SqlStmt create_table() {
        CreateTable ct;
        ct.def.name = expect_name();
        expect_punct("(");
        ct.def.columns.push_back(coldef());
        while (accept_punct(",")) ct.def.columns.push_back(coldef());
        expect_punct(")");
        return ct;
    }

    ColumnDef coldef() {
        ColumnDef c;
        c.name = expect_name();
        if (accept_kw("INT")) {
            c.type = ColType::Int;
        } else if (accept_kw("STRING")) {
            c.type = ColType::Str;
        } else {
            throw ParseError(cur().offset, {"INT", "STRING"}, cur().repr());
        }
        if (accept_kw("PRIMARY")) {
            expect_kw("KEY");
            c.is_pk = true;
        }
        if (accept_kw("REFERENCES")) {
            ForeignKey fk;
            fk.table = expect_name();
            expect_punct("(");
            fk.column = expect_name();
            expect_punct(")");
            c.fk = fk;
        }
        return c;
    }

    SqlStmt insert() {
        expect_kw("INTO");
        InsertValues iv;
        iv.table = expect_name();
        expect_kw("VALUES");
        iv.values = literal_list();
        return iv;
    }

    SqlStmt update() {
        UpdateSetWhereIn u;
        u.table = expect_name();
        expect_kw("SET");
        u.set_column = expect_name();
        expect_punct("=");
        u.set_value = literal();
        expect_kw("WHERE");
        u.where_column = expect_name();
        expect_kw("IN");
        u.in_values = literal_list();
        return u;
    }

    SqlStmt create_view() {
        CreateViewSelect cv;
        cv.view = expect_name();
        expect_kw("AS");
        cv.query = select();
        return cv;
    }

    bool peek_count() const {
        // COUNT immediately followed by '('
        return peek_kw("COUNT") && pos_ + 1 < toks_.size() &&
               toks_[pos_ + 1].kind == Tok::Punct && toks_[pos_ + 1].text == "(";
    }

    void parse_count(SelectQuery& q) {
        expect_kw("COUNT");
        expect_punct("(");
        expect_punct("*");
        expect_punct(")");
        q.count_star = true;
        if (accept_kw("AS")) q.count_alias = expect_name();
    }

    SelectQuery select() {
        expect_kw("SELECT");
        SelectQuery q;
        if (peek_count()) {
            parse_count(q);
        } else {
            q.columns.push_back(colref());
            while (accept_punct(",")) {
                if (peek_count()) {
                    parse_count(q);
                    break;
                }
                q.columns.push_back(colref());
            }
        }
        expect_kw("FROM");
        q.from = expect_name();
        if (accept_kw("JOIN")) {
            JoinClause j;
            j.table = expect_name();
            expect_kw("ON");
            j.left = colref();
            expect_punct("=");
            j.right = colref();
            q.join = j;
        }
        if (accept_kw("WHERE")) {
            WherePredicate w;
            w.column = colref();
            if (accept_punct("=")) {
                w.values.push_back(literal());
            } else if (accept_kw("IN")) {
                w.is_in = true;
                w.values = literal_list();
            } else {
                throw ParseError(cur().offset, {"'='", "IN"}, cur().repr());
            }
            q.where = w;
        }
        if (accept_kw("GROUP")) {
            expect_kw("BY");
            q.group_by.push_back(colref());
            while (accept_punct(",")) q.group_by.push_back(colref());
        }
        if (accept_kw("ORDER")) {
            expect_kw("BY");
            OrderBy ob;
            ob.column = expect_name();
            if (accept_kw("DESC")) {
                ob.dir = SortDir::Desc;
            } else {
                accept_kw("ASC");
            }
            q.order_by = ob;
        }
        return q;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// ---- printing ---------------------------------------------------------------

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "''";
        else out += c;
    }
    out += '\'';
    return out;
}

std::string print_literal(const Scalar& s) {
    if (scalar_is_null(s)) return "NULL";
    if (const auto* i = std::get_if<std::int64_t>(&s)) return std::to_string(*i);
    return quote(std::get<std::string>(s));
}

std::string print_literal_list(const std::vector<Scalar>& vals) {
    std::string out = "(";
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) out += ", ";
        out += print_literal(vals[i]);
    }
    out += ")";
    return out;
}

std::string print_select(const SelectQuery& q) {
    std::string out = "SELECT ";
    for (std::size_t i = 0; i < q.columns.size(); ++i) {
        if (i) out += ", ";
        out += q.columns[i].str();
    }
    if (q.count_star) {
        if (!q.columns.empty()) out += ", ";
        out += "COUNT(*)";
        if (q.count_alias) out += " AS " + *q.count_alias;
    }
    out += " FROM " + q.from;
    if (q.join) {
        out += " JOIN " + q.join->table + " ON " + q.join->left.str() + " = " +
               q.join->right.str();
    }
    if (q.where) {
        out += " WHERE " + q.where->column.str();
        if (q.where->is_in) {
            out += " IN " + print_literal_list(q.where->values);
        } else {
            out += " = " + print_literal(q.where->values.at(0));
        }
    }
    if (!q.group_by.empty()) {
        out += " GROUP BY ";
        for (std::size_t i = 0; i < q.group_by.size(); ++i) {
            if (i) out += ", ";
            out += q.group_by[i].str();
        }
    }
    if (q.order_by) {
        out += " ORDER BY " + q.order_by->column;
        if (q.order_by->dir == SortDir::Desc) out += " DESC";
    }
    return out;
}

struct Printer {
    std::string operator()(const CreateTable& ct) const {
        std::string out = "CREATE TABLE " + ct.def.name + " (";
        for (std::size_t i = 0; i < ct.def.columns.size(); ++i) {
            const auto& c = ct.def.columns[i];
            if (i) out += ", ";
            out += c.name;
            out += c.type == ColType::Int ? " INT" : " STRING";
            if (c.is_pk) out += " PRIMARY KEY";
            if (c.fk) out += " REFERENCES " + c.fk->table + "(" + c.fk->column + ")";
        }
        out += ")";
        return out;
    }
    std::string operator()(const InsertValues& iv) const {
        return "INSERT INTO " + iv.table + " VALUES " +
               print_literal_list(iv.values);
    }
    std::string operator()(const UpdateSetWhereIn& u) const {
        return "UPDATE " + u.table + " SET " + u.set_column + " = " +
               print_literal(u.set_value) + " WHERE " + u.where_column + " IN " +
               print_literal_list(u.in_values);
    }
    std::string operator()(const CreateViewSelect& cv) const {
        return "CREATE VIEW " + cv.view + " AS " + print_select(cv.query);
    }
    std::string operator()(const SelectAggregate& sa) const {
        return print_select(sa.query);
    }
};

}  // namespace

std::vector<SqlStmt> parse_sql(const std::string& text) {
    return Parser(Lexer(text).run()).run();
}

std::string print_sql(const SqlStmt& stmt) {
    return std::visit(Printer{}, stmt) + ";";
}

}  // namespace xtp::sql
