// Regenerates the checked-in fixture corpus: the diagram stand-in, the
// recorded gateway responses for both reference pipelines (plus the scripted
// confidence variants used by the tests), and the frozen expectation files.
// Run from the repository root: ./build/tools/gen_fixtures

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xtp/flow/executor.hpp"
#include "xtp/ops/clinical.hpp"
#include "xtp/pipeline/registry.hpp"
#include "xtp/pipeline/runner.hpp"
#include "xtp/sql/parser.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

// Byte range of the nth occurrence (1-based) of `needle`.
std::pair<std::uint64_t, std::uint64_t> find_nth(const std::string& text,
                                                 const std::string& needle, int nth) {
    std::size_t pos = std::string::npos;
    std::size_t from = 0;
    for (int i = 0; i < nth; ++i) {
        pos = text.find(needle, from);
        if (pos == std::string::npos) {
            throw std::runtime_error("needle not found: " + needle);
        }
        from = pos + 1;
    }
    return {pos, pos + needle.size()};
}

json span_of(const std::string& text, const std::string& needle, int nth = 1) {
    auto [s, e] = find_nth(text, needle, nth);
    return json::array({s, e});
}

// Scripted stand-in for the live model endpoint; responses are matched on
// (model, prompt prefix).
class ScriptedTransport : public xtp::gw::Transport {
public:
    struct Rule {
        std::string model;
        std::string prompt_prefix;
        std::string content;
    };
    std::vector<Rule> rules;

    Result post(const std::string&, const std::string& body,
                const std::string&) override {
        json j = json::parse(body);
        std::string model = j.at("model");
        std::string prompt = j.at("messages").at(0).at("content");
        for (const auto& r : rules) {
            if (r.model == model && prompt.rfind(r.prompt_prefix, 0) == 0) {
                json resp = {{"content", r.content},
                             {"usage",
                              {{"input_tokens", prompt.size() / 4},
                               {"output_tokens", r.content.size() / 4}}}};
                return {200, resp.dump()};
            }
        }
        throw std::runtime_error("no scripted response for model " + model +
                                 " prompt " + prompt.substr(0, 60));
    }
};

// Run a pipeline in record mode against the scripted endpoint so every
// request lands in the fixture directory under its canonical digest.
void record_run(const std::string& spec_path, const std::string& input_path,
                const std::string& fixtures_dir, ScriptedTransport::Rule* rules,
                std::size_t nrules) {
    auto spec = xtp::pipe::PipelineSpec::load(spec_path);
    const auto& registry = xtp::pipe::OperatorRegistry::builtin();
    static const auto coercions = xtp::CoercionRegistry::builtin();
    auto graph = registry.build_graph(spec, coercions);

    xtp::plan::CostModel model;
    auto synthesis = xtp::plan::synthesize(graph, spec.slo, model);
    if (!synthesis.feasible) throw std::runtime_error("spec SLO infeasible");

    auto transport = std::make_unique<ScriptedTransport>();
    transport->rules.assign(rules, rules + nrules);
    xtp::gw::GatewayConfig config;
    config.mode = xtp::gw::GatewayMode::Record;
    config.fixtures_dir = fixtures_dir;
    config.endpoint = "http://scripted.invalid/v1/chat";
    xtp::gw::Gateway gateway(config, std::move(transport));

    xtp::flow::ExecutionContext ctx;
    ctx.gateway = &gateway;
    ctx.coercions = &coercions;

    std::string text = read_file(input_path);
    xtp::TypedValue input;
    input.tag = graph.node(graph.entries().front()).op.in_type;
    input.payload = xtp::TextDoc{text};
    input.provenance.origins.push_back(
        {fs::path(input_path).filename().string(), 0, text.size()});

    xtp::flow::ProvenanceLedger ledger;
    try {
        xtp::flow::execute(graph, {input}, synthesis.plan, registry.invoker(), ctx,
                           ledger);
    } catch (const xtp::flow::RetryExhausted&) {
        // Expected for the exhaustion fixture set; the responses are already
        // recorded by the time the budget runs out.
    }
}

// Recorded latencies come from the wall clock; pin them so regeneration is
// byte-stable.
void normalize_latencies(const std::string& dir) {
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        json j = json::parse(read_file(entry.path()));
        std::string model =
            json::parse(j.at("request").get<std::string>()).at("model");
        j["response"]["latency_ms"] = model == "gpt-4o-mini" ? 400.0 : 1200.0;
        write_file(entry.path(), j.dump(2) + "\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    std::string root = argc > 1 ? argv[1] : ".";
    fs::current_path(root);

    const std::string notes = read_file("fixtures/clinical_notes.txt");
    const std::string source = "clinical_notes.txt";

    // --- diagram stand-in -----------------------------------------------
    xtp::ops::PropertyGraph circuit;
    circuit.components = {
        {1, "power", "V+", {{"voltage", std::int64_t{12}}}},
        {2, "switch", "SW", {}},
        {3, "resistor", std::nullopt, {{"resistance_ohm", std::int64_t{330}}}},
        {4, "led", std::nullopt, {{"forward_voltage", 2.0}}},
        {5, "ground", "GND", {}},
    };
    circuit.connections = {
        {"V+", "SW"}, {"SW", "resistor"}, {"resistor", "led"}, {"led", "GND"}};
    const std::string standin = circuit.to_text();
    write_file("fixtures/circuit.json", standin);

    // --- frozen rule-extractor expectation --------------------------------
    auto triplets = xtp::ops::extract_triplets(notes, source);
    write_file("fixtures/clinical_triplets_expected.json",
               xtp::ops::triplets_to_json(triplets).dump(2) + "\n");

    // --- scripted clinical responses --------------------------------------
    const std::string schema_text =
        "pt: id: int [PK], name: string, mrn: string, diagnosis: string\n"
        "med: id: int [PK], name: string, gsn: string, ndc: string, brand: string, "
        "route: string, dose_amount: string, dose_unit: string\n"
        "adm: id: int [PK], p_id: int [FK -> pt(id)], med_id: int [FK -> med(id)]";

    json neural_triplets = json::array();
    for (const auto& t : triplets) {
        neural_triplets.push_back({{"s", t.subject},
                                   {"p", t.predicate},
                                   {"o", t.object},
                                   {"span", {t.span.start, t.span.end}}});
    }

    auto rows = json::array();
    auto row = [&](const std::string& table, json values, json spans) {
        rows.push_back(
            {{"table", table}, {"values", values}, {"spans", spans}});
    };
    row("pt", {1, "John Doe", "874521", "pneumonia"},
        {span_of(notes, "John Doe"), span_of(notes, "874521"),
         span_of(notes, "pneumonia")});
    row("pt", {2, "Jane D.", "874522", "pneumonia"},
        {span_of(notes, "Jane D."), span_of(notes, "874522"),
         span_of(notes, "pneumonia", 2)});
    row("med", {1, "Azithromycin", "009812", "54569-5821", "Zithromax", "PO", "500", "mg"},
        {span_of(notes, "Azithromycin"), span_of(notes, "009812"),
         span_of(notes, "54569-5821"), span_of(notes, "Zithromax"),
         span_of(notes, "PO"), span_of(notes, "500mg")});
    row("med", {2, "Azithromycin", nullptr, "60505-3790", "Zmax", "PO", "250", "mg"},
        {span_of(notes, "Azithromycin", 2), span_of(notes, "60505-3790"),
         span_of(notes, "Zmax"), span_of(notes, "PO", 2),
         span_of(notes, "250mg")});
    row("adm", {1, 1, 1},
        {span_of(notes, "John Doe"), span_of(notes, "Azithromycin")});
    row("adm", {2, 2, 2},
        {span_of(notes, "Jane D."), span_of(notes, "Azithromycin", 2)});
    row("adm", {3, 1, 1},
        {span_of(notes, "John D."), span_of(notes, "Azithromycin", 3)});

    const std::string overrx_sql =
        "SELECT pt.id, pt.mrn, COUNT(*) AS antibiotics FROM adm JOIN pt ON "
        "adm.p_id = pt.id GROUP BY pt.id, pt.mrn ORDER BY antibiotics DESC;";

    const std::string report_text =
        "Antibiotic administration review for the covered period.\n"
        "The patient with MRN 874521 (pneumonia) received two azithromycin "
        "administrations of 500 mg PO within twelve hours, the second repeated "
        "without culture confirmation; this is flagged as possible "
        "overprescription.\n"
        "The patient with MRN 874522 (presumed pneumonia) received a single "
        "course of azithromycin 250 mg PO.\n"
        "Recommendation: review repeat azithromycin orders that lack culture "
        "results. The anonymized patient table and the dosage chart are "
        "attached.";

    ScriptedTransport::Rule clinical_rules[] = {
        {"gpt-4o", "Infer a relational schema",
         json{{"confidence", 0.98}, {"schema", schema_text}}.dump()},
        {"gpt-4o", "Extract (subject, predicate, object) triplets",
         json{{"confidence", 0.95}, {"triplets", neural_triplets}}.dump()},
        {"gpt-4o", "Align the extracted triplets",
         json{{"confidence", 0.99}, {"rows", rows}}.dump()},
        {"gpt-4o", "Write one SQL query",
         json{{"confidence", 0.99}, {"sql", overrx_sql}}.dump()},
        {"gpt-4o", "Write a short admin report",
         json{{"confidence", 0.97}, {"text", report_text}}.dump()},
    };
    record_run("pipelines/clinical.json", "fixtures/clinical_notes.txt",
               "fixtures/gateway", clinical_rules, std::size(clinical_rules));

    // --- scripted circuit responses ---------------------------------------
    json netlist = circuit.to_json();
    auto graph_content = [&](double confidence) {
        json j = {{"confidence", confidence},
                  {"components", netlist["components"]},
                  {"connections", netlist["connections"]}};
        return j.dump();
    };

    ScriptedTransport::Rule circuit_rules[] = {
        {"gpt-4o-mini", "Extract a component graph", graph_content(0.72)},
        {"gpt-4o", "Extract a component graph", graph_content(0.93)},
    };
    record_run("pipelines/circuit.json", "fixtures/circuit.json",
               "fixtures/gateway", circuit_rules, std::size(circuit_rules));

    ScriptedTransport::Rule conf80_rules[] = {
        {"gpt-4o-mini", "Extract a component graph", graph_content(0.80)},
        {"gpt-4o", "Extract a component graph", graph_content(0.93)},
    };
    record_run("pipelines/circuit.json", "fixtures/circuit.json",
               "tests/fixtures/conf80", conf80_rules, std::size(conf80_rules));

    ScriptedTransport::Rule conf72_rules[] = {
        {"gpt-4o-mini", "Extract a component graph", graph_content(0.72)},
        {"gpt-4o", "Extract a component graph", graph_content(0.72)},
    };
    record_run("pipelines/circuit.json", "fixtures/circuit.json",
               "tests/fixtures/conf72all", conf72_rules, std::size(conf72_rules));

    normalize_latencies("fixtures/gateway");
    normalize_latencies("tests/fixtures/conf80");
    normalize_latencies("tests/fixtures/conf72all");

    // --- frozen clinical end-state expectation ----------------------------
    auto schema = xtp::ops::parse_schema_text(schema_text);
    std::vector<xtp::ops::TableRow> table_rows;
    for (const auto& jr : rows) {
        xtp::ops::TableRow tr;
        tr.table = jr.at("table");
        for (const auto& v : jr.at("values")) {
            tr.values.push_back(xtp::sql::scalar_from_json(v));
        }
        table_rows.push_back(std::move(tr));
    }
    xtp::sql::Store store;
    for (const auto& stmt : xtp::ops::extract_sql(schema, table_rows)) {
        store.execute(stmt);
    }
    auto ranking = store.eval(
        std::get<xtp::sql::SelectAggregate>(xtp::sql::parse_sql(overrx_sql).at(0))
            .query);
    json expected = {
        {"top_mrn", xtp::sql::scalar_to_string(ranking.rows.at(0).at(1))},
        {"top_count", std::get<std::int64_t>(ranking.rows.at(0).at(2))},
        {"ranking", xtp::sql::relation_to_json(ranking)["rows"]}};
    write_file("fixtures/clinical_expected.json", expected.dump(2) + "\n");

    std::cout << "fixtures regenerated under " << fs::current_path() << "\n";
    return 0;
}
