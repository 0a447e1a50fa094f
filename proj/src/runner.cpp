#include "xtp/pipeline/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace xtp::pipe {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

const CoercionRegistry& coercions() {
    static const CoercionRegistry reg = CoercionRegistry::builtin();
    return reg;
}

gw::GatewayConfig gateway_config(const PipelineSpec& spec, const RunOptions& opts) {
    gw::GatewayConfig config;
    config.mode = gw::mode_from_string(opts.gateway_mode.value_or(spec.gateway_mode));
    config.fixtures_dir = opts.fixtures_dir.value_or(spec.fixtures_dir);
    config.endpoint = spec.endpoint;
    config.credential_env = spec.credential_env;
    return config;
}

TypedValue load_input(const std::string& path, const TypeTag& tag) {
    std::string text = read_file(path);
    TypedValue v;
    v.tag = tag;
    v.payload = TextDoc{text};
    v.provenance.origins.push_back(
        {fs::path(path).filename().string(), 0, text.size()});
    v.confidence = 1.0;
    return v;
}

nlohmann::json run_header(const PipelineSpec& spec, const RunOptions& opts,
                          const plan::PhysicalPlan& plan) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& p : opts.input_paths) inputs.push_back(fs::absolute(p).string());
    return {{"spec", fs::absolute(opts.spec_path).string()},
            {"pipeline", spec.name},
            {"inputs", inputs},
            {"seed", opts.seed},
            {"gateway", opts.gateway_mode.value_or(spec.gateway_mode)},
            {"fixtures", opts.fixtures_dir.value_or(spec.fixtures_dir)},
            {"plan", plan.to_json()}};
}

int classify_exception_code(const std::exception& e) {
    if (dynamic_cast<const flow::GuardViolationError*>(&e)) return kExitGuardViolation;
    if (dynamic_cast<const flow::RetryExhausted*>(&e)) return kExitRetryExhausted;
    return kExitError;
}

}  // namespace

ProvenanceQuery parse_entity(const std::string& text) {
    auto second = text.rfind(':');
    auto first = second == std::string::npos ? std::string::npos
                                             : text.rfind(':', second - 1);
    if (first == std::string::npos || second == std::string::npos || first == 0) {
        throw SpecError("entity must be source:start:end, got: " + text);
    }
    ProvenanceQuery q;
    q.source_id = text.substr(0, first);
    q.start = std::stoull(text.substr(first + 1, second - first - 1));
    q.end = std::stoull(text.substr(second + 1));
    return q;
}

void write_artifacts(const std::vector<TypedValue>& outputs,
                     const std::string& out_dir) {
    int report_n = 0, diagram_n = 0, table_n = 0, other_n = 0;
    auto suffixed = [](const std::string& base, int n, const std::string& ext) {
        return n == 0 ? base + ext : base + "_" + std::to_string(n) + ext;
    };
    for (const auto& v : outputs) {
        if (const auto* r = std::get_if<Report>(&v.payload)) {
            write_file(fs::path(out_dir) / suffixed("report", report_n, ".json"),
                       payload_to_json(v.payload).dump(2) + "\n");
            write_file(fs::path(out_dir) / suffixed("report", report_n, ".txt"),
                       report_to_text(*r));
            ++report_n;
        } else if (const auto* d = std::get_if<DiagramSource>(&v.payload)) {
            write_file(fs::path(out_dir) / suffixed("diagram", diagram_n, ".json"),
                       payload_to_json(v.payload).dump(2) + "\n");
            write_file(fs::path(out_dir) / suffixed("diagram", diagram_n, ".txt"),
                       netlist_to_dot(ops::PropertyGraph::parse(d->body)));
            ++diagram_n;
        } else if (std::holds_alternative<sql::Relation>(v.payload)) {
            write_file(fs::path(out_dir) / suffixed("table", table_n, ".json"),
                       payload_to_json(v.payload).dump(2) + "\n");
            ++table_n;
        } else {
            write_file(fs::path(out_dir) / suffixed("output", other_n, ".json"),
                       value_to_json(v).dump(2) + "\n");
            ++other_n;
        }
    }
}

RunOutcome run_pipeline(const RunOptions& opts) {
    RunOutcome outcome;
    PipelineSpec spec = PipelineSpec::load(opts.spec_path);
    const auto& registry = OperatorRegistry::builtin();
    flow::FlowGraph graph = registry.build_graph(spec, coercions());

    plan::CostModel model;
    auto synthesis = plan::synthesize(graph, spec.slo, model);
    if (!synthesis.feasible) {
        nlohmann::json report = {
            {"feasible", false},
            {"accuracy_target", spec.slo.accuracy_target},
            {"best_achievable_accuracy", synthesis.best_accuracy},
            {"assignment", synthesis.plan.assignment}};
        write_file(fs::path(opts.out_dir) / "plan_infeasible.json",
                   report.dump(2) + "\n");
        outcome.exit_code = kExitInfeasible;
        outcome.message = "SLO infeasible: best achievable accuracy " +
                          std::to_string(synthesis.best_accuracy) + " < target " +
                          std::to_string(spec.slo.accuracy_target);
        return outcome;
    }
    outcome.plan = synthesis.plan;
    write_file(fs::path(opts.out_dir) / "plan.json",
               synthesis.plan.to_json().dump(2) + "\n");

    gw::Gateway gateway(gateway_config(spec, opts));
    flow::ExecutionContext ctx;
    ctx.gateway = &gateway;
    ctx.coercions = &coercions();
    ctx.seed = opts.seed;

    // All entry nodes consume the same external input type.
    TypeTag input_tag = graph.node(graph.entries().front()).op.in_type;
    for (const auto& entry : graph.entries()) {
        if (!(graph.node(entry).op.in_type == input_tag)) {
            throw SpecError("entry nodes disagree on the input type");
        }
    }

    nlohmann::json header = run_header(spec, opts, synthesis.plan);
    plan::CostModel observed;
    auto finish = [&](int code, const std::string& message) {
        outcome.exit_code = code;
        outcome.message = message;
        write_file(fs::path(opts.out_dir) / "trace.jsonl",
                   outcome.ledger.to_jsonl(header));
        nlohmann::json summary = {
            {"status", code == kExitOk ? "ok" : "failed"},
            {"exit_code", code},
            {"message", message},
            {"coverage_observed", outcome.coverage_observed},
            {"coverage_target", spec.slo.coverage_fraction},
            {"replans", outcome.replans},
            {"tokens_observed", observed.total_observed_tokens()}};
        write_file(fs::path(opts.out_dir) / "run_summary.json",
                   summary.dump(2) + "\n");
        if (code == kExitOk) write_artifacts(outcome.outputs, opts.out_dir);
        return outcome;
    };

    int covered = 0;
    plan::PhysicalPlan current = synthesis.plan;
    try {
        for (std::size_t i = 0; i < opts.input_paths.size(); ++i) {
            TypedValue input = load_input(opts.input_paths[i], input_tag);
            ctx.sources[input.provenance.origins.front().source_id] =
                input_text(input);
            std::size_t first_event = outcome.ledger.events().size();
            auto outputs = flow::execute(graph, {input}, current,
                                         registry.invoker(), ctx, outcome.ledger);
            outcome.outputs.insert(outcome.outputs.end(), outputs.begin(),
                                   outputs.end());

            double proxy = 1.0;
            for (std::size_t e = first_event; e < outcome.ledger.events().size();
                 ++e) {
                const auto& ev = outcome.ledger.events()[e];
                observed.observe(ev);
                if (ev.outcome == flow::Outcome::Ok) proxy *= ev.confidence;
            }
            if (proxy >= spec.slo.accuracy_target) ++covered;

            // Replanning applies to subsequent inputs in the batch.
            if (i + 1 < opts.input_paths.size() &&
                plan::should_replan(observed, graph, current, spec.slo)) {
                auto next = plan::synthesize(graph, spec.slo, observed);
                if (next.feasible) {
                    current = next.plan;
                    ++outcome.replans;
                }
            }
        }
    } catch (const flow::GuardViolationError& e) {
        return finish(kExitGuardViolation, e.what());
    } catch (const flow::RetryExhausted& e) {
        return finish(kExitRetryExhausted, e.what());
    } catch (const std::exception& e) {
        return finish(classify_exception_code(e), e.what());
    }
    outcome.coverage_observed =
        opts.input_paths.empty()
            ? 1.0
            : static_cast<double>(covered) /
                  static_cast<double>(opts.input_paths.size());
    return finish(kExitOk, "ok");
}

PlanOutcome plan_pipeline(const std::string& spec_path) {
    PlanOutcome out;
    PipelineSpec spec = PipelineSpec::load(spec_path);
    flow::FlowGraph graph =
        OperatorRegistry::builtin().build_graph(spec, coercions());
    plan::CostModel model;
    auto synthesis = plan::synthesize(graph, spec.slo, model);
    if (!synthesis.feasible) {
        out.exit_code = kExitInfeasible;
        out.document = {{"feasible", false},
                        {"accuracy_target", spec.slo.accuracy_target},
                        {"best_achievable_accuracy", synthesis.best_accuracy},
                        {"assignment", synthesis.plan.assignment}};
    } else {
        out.document = synthesis.plan.to_json();
    }
    return out;
}

ProvenanceOutcome query_provenance(const std::string& trace_path,
                                   const std::vector<ProvenanceQuery>& entities) {
    ProvenanceOutcome out;
    auto ledger = flow::ProvenanceLedger::from_jsonl(read_file(trace_path), nullptr);
    std::vector<SourceSpan> spans;
    for (const auto& e : entities) spans.push_back({e.source_id, e.start, e.end});
    out.elements = ledger.contributing_elements(spans);
    out.bound = static_cast<std::int64_t>(out.elements.size());
    return out;
}

RunOutcome replay_pipeline(const ReplayOptions& opts) {
    RunOutcome outcome;
    nlohmann::json header;
    auto original =
        flow::ProvenanceLedger::from_jsonl(read_file(opts.trace_path), &header);
    if (header.is_null() || !header.contains("spec")) {
        throw SpecError("trace has no run header: " + opts.trace_path);
    }
    PipelineSpec spec = PipelineSpec::load(header.at("spec").get<std::string>());
    const auto& registry = OperatorRegistry::builtin();
    flow::FlowGraph graph = registry.build_graph(spec, coercions());
    plan::PhysicalPlan plan = plan::PhysicalPlan::from_json(header.at("plan"));

    TypedValue fix = value_from_json(nlohmann::json::parse(read_file(opts.fix_path)));

    RunOptions gw_opts;
    gw_opts.gateway_mode = header.value("gateway", spec.gateway_mode);
    gw_opts.fixtures_dir = header.value("fixtures", spec.fixtures_dir);
    gw::Gateway gateway(gateway_config(spec, gw_opts));

    flow::ExecutionContext ctx;
    ctx.gateway = &gateway;
    ctx.coercions = &coercions();
    ctx.seed = header.value("seed", std::uint64_t{0});

    try {
        auto result = flow::replay(graph, original, opts.node, fix, plan,
                                   registry.invoker(), ctx);
        outcome.outputs = std::move(result.outputs);
        outcome.ledger = std::move(result.ledger);
    } catch (const flow::GuardViolationError& e) {
        outcome.exit_code = kExitGuardViolation;
        outcome.message = e.what();
        return outcome;
    } catch (const flow::RetryExhausted& e) {
        outcome.exit_code = kExitRetryExhausted;
        outcome.message = e.what();
        return outcome;
    }

    nlohmann::json replay_header = header;
    replay_header["replayed_node"] = opts.node;
    replay_header["fix"] = fs::absolute(opts.fix_path).string();
    write_file(fs::path(opts.out_dir) / "trace.jsonl",
               outcome.ledger.to_jsonl(replay_header));
    write_artifacts(outcome.outputs, opts.out_dir);
    outcome.message = "ok";
    return outcome;
}

}  // namespace xtp::pipe
