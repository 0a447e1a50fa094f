#include "xtp/pipeline/registry.hpp"

#include <algorithm>

#include "xtp/ops/clinical.hpp"
#include "xtp/ops/dp.hpp"
#include "xtp/sql/parser.hpp"

namespace xtp::pipe {

namespace {

constexpr std::int64_t kMaxTokens = 1024;
constexpr double kTemperature = 0.0;

gw::ModelRequest make_request(const std::string& model, const std::string& prompt) {
    gw::ModelRequest req;
    req.model_id = model;
    req.temperature = kTemperature;
    req.max_tokens = kMaxTokens;
    req.parts.push_back({"user", prompt});
    return req;
}

std::pair<nlohmann::json, double> parse_neural(const std::string& content) {
    nlohmann::json j = nlohmann::json::parse(content);
    double confidence = j.value("confidence", 1.0);
    return {std::move(j), confidence};
}

const std::string& input_text(const TypedValue& v) {
    if (const auto* t = std::get_if<TextDoc>(&v.payload)) return t->text;
    if (const auto* o = std::get_if<Opaque>(&v.payload)) {
        if (o->data.contains("text")) {
            return o->data.at("text").get_ref<const std::string&>();
        }
    }
    throw std::invalid_argument("operator input carries no text payload");
}

std::string source_of(const TypedValue& v) {
    if (!v.provenance.origins.empty()) return v.provenance.origins.front().source_id;
    return "input";
}

ProvenanceRef merged_provenance(const std::vector<TypedValue>& inputs) {
    ProvenanceRef prov;
    for (const auto& in : inputs) {
        for (const auto& o : in.provenance.origins) prov.add_origin(o);
        prov.invocations.insert(prov.invocations.end(),
                                in.provenance.invocations.begin(),
                                in.provenance.invocations.end());
    }
    return prov;
}

sql::Store store_of(const TypedValue& v) {
    const auto* o = std::get_if<Opaque>(&v.payload);
    if (!o || o->type_name != "store") {
        throw std::invalid_argument("operator input is not a store snapshot");
    }
    return sql::Store::from_json(o->data);
}

TypedValue store_value(const sql::Store& store, ProvenanceRef prov) {
    TypedValue v;
    v.tag = TypeTag::make(BaseType::Structured);
    v.payload = Opaque{"store", store.to_json()};
    v.provenance = std::move(prov);
    return v;
}

std::string store_schema_text(const sql::Store& store) {
    std::string out;
    for (const auto& name : store.table_names()) {
        if (!out.empty()) out += "; ";
        out += name + "(";
        const auto& def = store.table_def(name);
        for (std::size_t i = 0; i < def.columns.size(); ++i) {
            if (i) out += ", ";
            out += def.columns[i].name;
        }
        out += ")";
    }
    return out;
}

// Spans of the JSON object enclosing `needle`, for mapping extracted
// elements back to the diagram stand-in text.
std::optional<std::pair<std::uint64_t, std::uint64_t>> object_span(
    const std::string& text, const std::string& needle, std::size_t from = 0) {
    auto pos = text.find(needle, from);
    if (pos == std::string::npos) return std::nullopt;
    auto open = text.rfind('{', pos);
    if (open == std::string::npos) return std::nullopt;
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') {
            if (--depth == 0) return std::make_pair(open, i + 1);
        }
    }
    return std::nullopt;
}

SourceSpan whole_document(const std::string& source_id, const std::string& text) {
    return {source_id, 0, text.size()};
}

}  // namespace

gw::ModelRequest schema_request(const std::string& model, const std::string& notes) {
    return make_request(
        model,
        "Infer a relational schema for the following clinical notes. List one "
        "table per line as `name: col: type [PK], ...` with [FK -> t(c)] "
        "annotations.\n\n" +
            notes);
}

gw::ModelRequest triplets_request(const std::string& model, const std::string& notes) {
    return make_request(
        model,
        "Extract (subject, predicate, object) triplets with byte spans from "
        "the following clinical notes.\n\n" +
            notes);
}

gw::ModelRequest align_request(const std::string& model,
                               const std::string& schema_text,
                               const std::string& triplets_text) {
    return make_request(
        model,
        "Align the extracted triplets with the schema and emit one row per "
        "record with source spans.\n\nSchema:\n" +
            schema_text + "\n\nTriplets:\n" + triplets_text);
}

gw::ModelRequest overprescription_request(const std::string& model,
                                          const std::string& schema_text) {
    return make_request(
        model,
        "Write one SQL query that ranks patients by antibiotic "
        "administrations, highest first, over this schema.\n\n" +
            schema_text);
}

gw::ModelRequest report_request(const std::string& model, const std::string& facts) {
    return make_request(
        model,
        "Write a short admin report summarizing overprescription trends from "
        "these facts. Refer to patients only by MRN.\n\n" +
            facts);
}

gw::ModelRequest extract_graph_request(const std::string& model,
                                       const std::string& diagram_standin) {
    return make_request(
        model,
        "Extract a component graph from this circuit diagram.\n\n" + diagram_standin);
}

std::string relation_to_csv(const sql::Relation& r) {
    std::string out;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (i) out += ",";
        out += r.columns[i];
    }
    out += "\n";
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            if (!sql::scalar_is_null(row[i])) out += sql::scalar_to_string(row[i]);
        }
        out += "\n";
    }
    return out;
}

std::string netlist_to_dot(const ops::PropertyGraph& g) {
    std::string out = "digraph circuit {\n";
    for (const auto& c : g.components) {
        out += "  \"" + c.effective_label() + "\" [shape=box label=\"" +
               c.effective_label() + "\\n" + c.ctype;
        if (auto r = c.num_attr("resistance_ohm")) {
            out += "\\n" + std::to_string(static_cast<long long>(*r)) + " ohm";
        }
        if (auto v = c.num_attr("voltage")) {
            out += "\\n" + std::to_string(static_cast<long long>(*v)) + " V";
        }
        out += "\"];\n";
    }
    for (const auto& con : g.connections) {
        out += "  \"" + con.from + "\" -> \"" + con.to + "\";\n";
    }
    out += "}\n";
    return out;
}

const OperatorRegistry& OperatorRegistry::builtin() {
    static const OperatorRegistry registry = [] {
        OperatorRegistry r;
        using flow::InvokeResult;
        using flow::Node;
        using Inputs = std::vector<TypedValue>;
        using Ctx = flow::ExecutionContext;

        auto model_of = [](const Node& node, const std::string& impl) {
            const auto* cand = node.op.find_candidate(impl);
            if (!cand || cand->tool != ops::ToolKind::ModelRef) {
                throw std::invalid_argument("impl " + impl + " is not a model");
            }
            return cand->model_id;
        };
        auto send = [](Ctx& ctx, const gw::ModelRequest& req) {
            if (!ctx.gateway) {
                throw std::invalid_argument("neural operator invoked without a gateway");
            }
            return ctx.gateway->send(req);
        };

        r.entries_["extract_schema"] = {
            ops::OpKind::Neural,
            {{"gpt-4o", ops::ToolKind::ModelRef, "gpt-4o", {900, 1800.0, 0.99}}},
            [model_of, send](const Node& node, const std::string& impl,
                             const Inputs& in, Ctx& ctx) {
                auto resp = send(ctx, schema_request(model_of(node, impl),
                                                     input_text(in.at(0))));
                auto [j, conf] = parse_neural(resp.content);
                std::string schema_text = j.at("schema").get<std::string>();
                auto schema = ops::parse_schema_text(schema_text);
                auto errors = ops::schema_validate(schema);
                if (!errors.empty()) {
                    throw std::invalid_argument("extracted schema fails validation: " +
                                                errors.front().kind + " " +
                                                errors.front().detail);
                }
                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::Structured);
                out.output.payload = Opaque{
                    "schema",
                    {{"text", schema_text}, {"schema", ops::schema_to_json(schema)}}};
                out.output.provenance = merged_provenance(in);
                out.output.confidence = conf;
                out.tokens_in = resp.tokens_in;
                out.tokens_out = resp.tokens_out;
                out.latency_ms = resp.latency_ms;
                return out;
            }};

        r.entries_["extract_triplets"] = {
            ops::OpKind::Hybrid,
            {{"corenlp-rules", ops::ToolKind::ProcedureRef, "", {0, 40.0, 0.85}},
             {"gpt-4o", ops::ToolKind::ModelRef, "gpt-4o", {700, 1500.0, 0.95}}},
            [model_of, send](const Node& node, const std::string& impl,
                             const Inputs& in, Ctx& ctx) {
                const std::string& text = input_text(in.at(0));
                const std::string source = source_of(in.at(0));
                std::vector<ops::Triplet> triplets;
                InvokeResult out;
                if (impl == "corenlp-rules") {
                    triplets = ops::extract_triplets(text, source);
                    out.output.confidence = 1.0;
                } else {
                    auto resp = send(ctx, triplets_request(model_of(node, impl), text));
                    auto [j, conf] = parse_neural(resp.content);
                    for (const auto& jt : j.at("triplets")) {
                        ops::Triplet t;
                        t.subject = jt.at("s").get<std::string>();
                        t.predicate = jt.at("p").get<std::string>();
                        t.object = jt.at("o").get<std::string>();
                        t.span = {source, jt.at("span").at(0).get<std::uint64_t>(),
                                  jt.at("span").at(1).get<std::uint64_t>()};
                        triplets.push_back(std::move(t));
                    }
                    out.output.confidence = conf;
                    out.tokens_in = resp.tokens_in;
                    out.tokens_out = resp.tokens_out;
                    out.latency_ms = resp.latency_ms;
                }
                out.output.tag = TypeTag::make(BaseType::Structured);
                out.output.payload = Opaque{"triplets", ops::triplets_to_json(triplets)};
                out.output.provenance = merged_provenance(in);
                for (std::size_t i = 0; i < triplets.size(); ++i) {
                    out.element_origins.emplace_back("triplet:" + std::to_string(i),
                                                     triplets[i].span);
                    out.output.provenance.add_origin(triplets[i].span);
                }
                return out;
            }};

        r.entries_["extract_value"] = {
            ops::OpKind::Neural,
            {{"gpt-4o", ops::ToolKind::ModelRef, "gpt-4o", {800, 1600.0, 0.99}}},
            [model_of, send](const Node& node, const std::string& impl,
                             const Inputs& in, Ctx& ctx) {
                const auto& schema_bundle = std::get<Opaque>(in.at(0).payload);
                const auto& triplet_bundle = std::get<Opaque>(in.at(1).payload);
                const std::string source = source_of(in.at(0));
                auto resp = send(
                    ctx, align_request(model_of(node, impl),
                                       schema_bundle.data.at("text").get<std::string>(),
                                       triplet_bundle.data.dump()));
                auto [j, conf] = parse_neural(resp.content);
                nlohmann::json rows = nlohmann::json::array();
                for (const auto& jr : j.at("rows")) {
                    nlohmann::json spans = nlohmann::json::array();
                    for (const auto& js : jr.at("spans")) {
                        spans.push_back({source, js.at(0).get<std::uint64_t>(),
                                         js.at(1).get<std::uint64_t>()});
                    }
                    rows.push_back({{"table", jr.at("table")},
                                    {"values", jr.at("values")},
                                    {"spans", spans}});
                }
                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::Structured);
                out.output.payload =
                    Opaque{"aligned_rows",
                           {{"schema", schema_bundle.data.at("schema")}, {"rows", rows}}};
                out.output.provenance = merged_provenance(in);
                out.output.confidence = conf;
                out.tokens_in = resp.tokens_in;
                out.tokens_out = resp.tokens_out;
                out.latency_ms = resp.latency_ms;
                return out;
            }};

        r.entries_["extract_sql"] = {
            ops::OpKind::Symbolic,
            {{"sql-emitter", ops::ToolKind::ProcedureRef, "", {0, 5.0, 1.0}}},
            [](const Node&, const std::string&, const Inputs& in, Ctx&) {
                const auto& bundle = std::get<Opaque>(in.at(0).payload);
                auto schema = ops::schema_from_json(bundle.data.at("schema"));
                std::vector<ops::TableRow> rows;
                for (const auto& jr : bundle.data.at("rows")) {
                    ops::TableRow row;
                    row.table = jr.at("table").get<std::string>();
                    for (const auto& v : jr.at("values")) {
                        row.values.push_back(sql::scalar_from_json(v));
                    }
                    rows.push_back(std::move(row));
                }
                auto stmts = ops::extract_sql(schema, rows);
                nlohmann::json statements = nlohmann::json::array();
                for (const auto& s : stmts) statements.push_back(sql::print_sql(s));
                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::Structured);
                out.output.payload = Opaque{"sql_script",
                                            {{"schema", bundle.data.at("schema")},
                                             {"rows", bundle.data.at("rows")},
                                             {"statements", statements}}};
                out.output.provenance = merged_provenance(in);
                return out;
            }};

        r.entries_["build_store"] = {
            ops::OpKind::Symbolic,
            {{"sql-engine", ops::ToolKind::ProcedureRef, "", {0, 5.0, 1.0}}},
            [](const Node&, const std::string&, const Inputs& in, Ctx&) {
                const auto& bundle = std::get<Opaque>(in.at(0).payload);
                auto schema = ops::schema_from_json(bundle.data.at("schema"));
                sql::Store store;
                for (const auto& jstmt : bundle.data.at("statements")) {
                    store.execute_script(jstmt.get<std::string>());
                }
                InvokeResult out;
                // Row provenance: each inserted row is an element keyed by
                // table and primary key, carrying the aligned spans.
                for (const auto& jr : bundle.data.at("rows")) {
                    std::string table = jr.at("table").get<std::string>();
                    const auto* def = schema.find_table(table);
                    if (!def) continue;
                    int pk = def->pk_index();
                    std::string element =
                        table + ":" +
                        sql::scalar_to_string(
                            sql::scalar_from_json(jr.at("values").at(pk)));
                    for (const auto& js : jr.at("spans")) {
                        out.element_origins.emplace_back(
                            element,
                            SourceSpan{js.at(0).get<std::string>(),
                                       js.at(1).get<std::uint64_t>(),
                                       js.at(2).get<std::uint64_t>()});
                    }
                }
                out.output = store_value(store, merged_provenance(in));
                return out;
            }};

        r.entries_["sql_transform"] = {
            ops::OpKind::Symbolic,
            {{"sql-engine", ops::ToolKind::ProcedureRef, "", {0, 5.0, 1.0}}},
            [](const Node& node, const std::string&, const Inputs& in, Ctx&) {
                sql::Store store = store_of(in.at(0));
                auto results =
                    store.execute_script(node.params.at("sql").get<std::string>());
                std::int64_t affected = 0;
                for (const auto& res : results) {
                    if (const auto* n = std::get_if<std::int64_t>(&res)) affected += *n;
                }
                InvokeResult out;
                out.output = store_value(store, merged_provenance(in));
                out.annotation = {{"rows_affected", affected}};
                return out;
            }};

        r.entries_["deidentify"] = {
            ops::OpKind::Symbolic,
            {{"sql-view", ops::ToolKind::ProcedureRef, "", {0, 5.0, 1.0}}},
            [](const Node& node, const std::string&, const Inputs& in, Ctx&) {
                sql::Store store = store_of(in.at(0));
                auto keep = node.params.at("keep").get<std::vector<std::string>>();
                std::string table = node.params.at("table").get<std::string>();
                std::string view =
                    node.params.value("view", "anonymized_" + table);
                auto res = ops::deidentify(store, table, keep, view);
                InvokeResult out;
                out.output = store_value(store, merged_provenance(in));
                out.deleted_values.assign(res.deleted_values.begin(),
                                          res.deleted_values.end());
                out.annotation = {{"view", res.view_name},
                                  {"deleted_count", res.deleted_values.size()}};
                return out;
            }};

        r.entries_["check_overprescription"] = {
            ops::OpKind::Hybrid,
            {{"gpt-4o", ops::ToolKind::ModelRef, "gpt-4o", {400, 1200.0, 0.99}}},
            [model_of, send](const Node& node, const std::string& impl,
                             const Inputs& in, Ctx& ctx) {
                sql::Store store = store_of(in.at(0));
                auto resp = send(ctx, overprescription_request(
                                          model_of(node, impl),
                                          store_schema_text(store)));
                auto [j, conf] = parse_neural(resp.content);
                std::string sql_text = j.at("sql").get<std::string>();
                auto stmts = sql::parse_sql(sql_text);
                const auto* select = std::get_if<sql::SelectAggregate>(&stmts.at(0));
                if (!select) {
                    throw std::invalid_argument(
                        "overprescription model output is not a SELECT");
                }
                sql::Relation result = store.eval(select->query);
                result.name = "overprescription";
                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::Table);
                out.output.payload = std::move(result);
                out.output.provenance = merged_provenance(in);
                out.output.confidence = conf;
                out.tokens_in = resp.tokens_in;
                out.tokens_out = resp.tokens_out;
                out.latency_ms = resp.latency_ms;
                out.annotation = {{"sql", sql_text}};
                return out;
            }};

        r.entries_["project_report"] = {
            ops::OpKind::Neural,
            {{"gpt-4o", ops::ToolKind::ModelRef, "gpt-4o", {900, 2000.0, 0.99}}},
            [model_of, send](const Node& node, const std::string& impl,
                             const Inputs& in, Ctx& ctx) {
                // Inputs: normalized store, de-identified store, ranking.
                sql::Store norm = store_of(in.at(0));
                sql::Store deid = store_of(in.at(1));
                const auto& ranking = std::get<sql::Relation>(in.at(2).payload);

                std::string view = node.params.value("view", "anonymized_patients");
                std::string anonymized_csv = relation_to_csv(deid.read(view));

                std::string chart_sql = node.params.value(
                    "chart_sql",
                    std::string("SELECT med.name, med.dose_amount, COUNT(*) AS count "
                                "FROM adm JOIN med ON adm.med_id = med.id "
                                "GROUP BY med.name, med.dose_amount "
                                "ORDER BY count DESC;"));
                auto chart_stmts = sql::parse_sql(chart_sql);
                sql::Relation chart =
                    norm.eval(std::get<sql::SelectAggregate>(chart_stmts.at(0)).query);
                if (node.params.contains("chart_header")) {
                    auto header =
                        node.params["chart_header"].get<std::vector<std::string>>();
                    if (header.size() == chart.columns.size()) chart.columns = header;
                }
                std::string chart_csv = relation_to_csv(chart);

                std::string facts = "ranking:\n" + relation_to_csv(ranking) +
                                    "\nanonymized:\n" + anonymized_csv +
                                    "\ndosage chart:\n" + chart_csv;
                auto resp = send(ctx, report_request(model_of(node, impl), facts));
                auto [j, conf] = parse_neural(resp.content);

                Report report;
                report.sections.push_back(
                    {SectionKind::Text, j.at("text").get<std::string>()});
                report.sections.push_back({SectionKind::ChartData, anonymized_csv});
                report.sections.push_back({SectionKind::ChartData, chart_csv});

                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::Report);
                out.output.payload = std::move(report);
                out.output.provenance = merged_provenance(in);
                out.output.confidence = conf;
                out.tokens_in = resp.tokens_in;
                out.tokens_out = resp.tokens_out;
                out.latency_ms = resp.latency_ms;
                return out;
            }};

        r.entries_["extract_graph"] = {
            ops::OpKind::Neural,
            {{"gpt-4o-mini", ops::ToolKind::ModelRef, "gpt-4o-mini", {350, 900.0, 0.80}},
             {"gpt-4o", ops::ToolKind::ModelRef, "gpt-4o", {900, 1800.0, 0.97}}},
            [model_of, send](const Node& node, const std::string& impl,
                             const Inputs& in, Ctx& ctx) {
                const std::string& standin = input_text(in.at(0));
                const std::string source = source_of(in.at(0));
                auto resp =
                    send(ctx, extract_graph_request(model_of(node, impl), standin));
                auto [j, conf] = parse_neural(resp.content);
                auto graph = ops::PropertyGraph::from_json(j);
                ops::check_graph(graph, /*circuit_refinement=*/true);

                InvokeResult out;
                for (const auto& c : graph.components) {
                    SourceSpan span = whole_document(source, standin);
                    if (auto s = object_span(standin,
                                             "\"id\": " + std::to_string(c.id))) {
                        span = {source, s->first, s->second};
                    }
                    out.element_origins.emplace_back(
                        "component:" + std::to_string(c.id), span);
                    out.output.provenance.add_origin(span);
                }
                for (const auto& con : graph.connections) {
                    SourceSpan span = whole_document(source, standin);
                    std::size_t at = 0;
                    while (true) {
                        auto s = object_span(standin, "\"from\": \"" + con.from + "\"", at);
                        if (!s) break;
                        std::string obj = standin.substr(s->first, s->second - s->first);
                        if (obj.find("\"to\": \"" + con.to + "\"") != std::string::npos) {
                            span = {source, s->first, s->second};
                            break;
                        }
                        at = s->second;
                    }
                    out.element_origins.emplace_back(
                        "connection:" + con.from + "->" + con.to, span);
                }
                out.output.tag = node.op.out_type;
                out.output.payload = std::move(graph);
                out.output.confidence = conf;
                out.tokens_in = resp.tokens_in;
                out.tokens_out = resp.tokens_out;
                out.latency_ms = resp.latency_ms;
                return out;
            }};

        r.entries_["validate_extract"] = {
            ops::OpKind::Symbolic,
            {{"rule-checker", ops::ToolKind::ProcedureRef, "", {0, 3.0, 1.0}}},
            [](const Node& node, const std::string&, const Inputs& in, Ctx&) {
                const auto& graph = std::get<ops::PropertyGraph>(in.at(0).payload);
                ops::ValidationRule rule;
                rule.rule_id = node.params.value("rule_id", rule.rule_id);
                rule.i_max_mA = node.params.value("i_max_mA", rule.i_max_mA);
                rule.v_source_key = node.params.value("v_source_key", rule.v_source_key);
                rule.v_forward_key =
                    node.params.value("v_forward_key", rule.v_forward_key);
                rule.resistance_key =
                    node.params.value("resistance_key", rule.resistance_key);
                auto warnings = ops::validate_circuit(graph, {rule});

                nlohmann::json jw = nlohmann::json::array();
                for (const auto& w : warnings) {
                    jw.push_back({{"rule_id", w.rule_id},
                                  {"component_id", w.component_id},
                                  {"message", w.message},
                                  {"computed_mA", w.computed_mA}});
                }
                InvokeResult out;
                out.output = in.at(0);
                out.output.confidence = 1.0;
                out.warnings = static_cast<int>(warnings.size());
                out.annotation = {{"warnings", jw}};
                return out;
            }};

        r.entries_["add_redundancy"] = {
            ops::OpKind::Symbolic,
            {{"branch-duplicator", ops::ToolKind::ProcedureRef, "", {0, 3.0, 1.0}}},
            [](const Node&, const std::string&, const Inputs& in, Ctx& ctx) {
                const auto& graph = std::get<ops::PropertyGraph>(in.at(0).payload);
                std::vector<std::pair<int, int>> dup_map;
                auto extended = ops::add_redundancy(graph, &dup_map);

                InvokeResult out;
                // Duplicated components inherit the origins of the components
                // they mirror.
                if (ctx.ledger) {
                    auto origins = ctx.ledger->element_origins();
                    for (const auto& [dup_id, orig_id] : dup_map) {
                        auto it = origins.find("component:" + std::to_string(orig_id));
                        if (it == origins.end()) continue;
                        for (const auto& span : it->second) {
                            out.element_origins.emplace_back(
                                "component:" + std::to_string(dup_id), span);
                        }
                    }
                }
                out.output = in.at(0);
                out.output.payload = std::move(extended);
                out.output.confidence = 1.0;
                out.annotation = {{"added_components", dup_map.size()}};
                return out;
            }};

        r.entries_["project_diagram"] = {
            ops::OpKind::Symbolic,
            {{"netlist-printer", ops::ToolKind::ProcedureRef, "", {0, 3.0, 1.0}}},
            [](const Node&, const std::string&, const Inputs& in, Ctx&) {
                const auto& graph = std::get<ops::PropertyGraph>(in.at(0).payload);
                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::DiagramSource);
                out.output.payload = DiagramSource{"xtp-netlist/1", graph.to_text()};
                out.output.provenance = merged_provenance(in);
                return out;
            }};

        r.entries_["dp_count"] = {
            ops::OpKind::Symbolic,
            {{"laplace", ops::ToolKind::ProcedureRef, "", {0, 3.0, 1.0}}},
            [](const Node& node, const std::string&, const Inputs& in, Ctx& ctx) {
                sql::Store store = store_of(in.at(0));
                double epsilon = node.params.at("epsilon").get<double>();
                auto sensitivity = node.params.at("sensitivity").get<std::int64_t>();
                ops::LaplaceNoise noise(ctx.seed);
                auto rel = ops::dp_count(store, node.params.at("view").get<std::string>(),
                                         node.params.at("group_col").get<std::string>(),
                                         epsilon, sensitivity, noise);
                InvokeResult out;
                out.output.tag = TypeTag::make(BaseType::Table);
                out.output.payload = std::move(rel);
                out.output.provenance = merged_provenance(in);
                out.annotation = {{"epsilon", epsilon},
                                  {"sensitivity", sensitivity},
                                  {"scale_b", static_cast<double>(sensitivity) / epsilon}};
                return out;
            }};

        return r;
    }();
    return registry;
}

bool OperatorRegistry::has(const std::string& op_name) const {
    return entries_.count(op_name) > 0;
}

flow::Node OperatorRegistry::make_node(const NodeSpec& spec) const {
    auto it = entries_.find(spec.op);
    if (it == entries_.end()) {
        throw SpecError("unknown operator: " + spec.op);
    }
    flow::Node node;
    node.id = spec.id;
    node.params = spec.params;
    node.op.name = spec.op;
    node.op.kind = it->second.kind;
    node.op.binding = spec.binding == "fungible" ? ops::Binding::Fungible
                                                 : ops::Binding::Preprogrammed;
    node.op.in_type = TypeTag::parse(spec.in_type);
    node.op.out_type = TypeTag::parse(spec.out_type);
    if (spec.params.contains("intent")) {
        node.op.intent_prompt = spec.params["intent"].get<std::string>();
    }

    if (spec.params.contains("candidates")) {
        for (const auto& jc : spec.params["candidates"]) {
            ops::ImplCandidate c;
            c.impl_id = jc.at("impl_id").get<std::string>();
            c.tool = jc.value("tool", "procedure") == "model"
                         ? ops::ToolKind::ModelRef
                         : ops::ToolKind::ProcedureRef;
            c.model_id = jc.value("model", c.impl_id);
            c.cost.tokens_est = jc.value("tokens_est", std::int64_t{0});
            c.cost.latency_ms_est = jc.value("latency_ms_est", 1.0);
            c.cost.accuracy_est = jc.value("accuracy_est", 1.0);
            node.op.candidates.push_back(std::move(c));
        }
    } else {
        node.op.candidates = it->second.default_candidates;
        if (node.op.binding == ops::Binding::Preprogrammed &&
            node.op.candidates.size() > 1) {
            node.op.candidates.resize(1);
        }
    }
    ops::check_operator_spec(node.op);
    return node;
}

flow::OpInvoker OperatorRegistry::invoker() const {
    return [this](const flow::Node& node, const std::string& impl,
                  const std::vector<TypedValue>& inputs,
                  flow::ExecutionContext& ctx) -> flow::InvokeResult {
        auto it = entries_.find(node.op.name);
        if (it == entries_.end()) {
            throw std::invalid_argument("unknown operator: " + node.op.name);
        }
        return it->second.invoke(node, impl, inputs, ctx);
    };
}

flow::FlowGraph OperatorRegistry::build_graph(const PipelineSpec& spec,
                                              const CoercionRegistry& coercions) const {
    std::vector<flow::Node> nodes;
    for (const auto& n : spec.nodes) nodes.push_back(make_node(n));
    std::vector<flow::Edge> edges;
    for (const auto& e : spec.edges) {
        flow::Edge edge;
        edge.from = e.from;
        edge.to = e.to;
        edge.kind = flow::edge_kind_from_string(e.kind);
        if (e.threshold) edge.threshold = *e.threshold;
        if (e.fail_to) edge.fail_to = *e.fail_to;
        if (e.max_retries) edge.max_retries = *e.max_retries;
        if (e.escalation) edge.escalation = *e.escalation;
        if (e.predicate) edge.predicate = *e.predicate;
        if (edge.kind == flow::EdgeKind::Confidence && edge.fail_to.empty()) {
            edge.fail_to = edge.from;
        }
        edges.push_back(std::move(edge));
    }
    return flow::FlowGraph::build(std::move(nodes), std::move(edges), coercions);
}

}  // namespace xtp::pipe
