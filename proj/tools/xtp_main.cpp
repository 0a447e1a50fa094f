#include <iostream>

#include <CLI11.hpp>

#include "xtp/pipeline/runner.hpp"

namespace {

int safe_main(int argc, char** argv) {
    CLI::App app{"typed dataflow pipelines over unstructured inputs"};
    app.require_subcommand(1);

    // plan
    std::string plan_spec;
    std::string plan_out;
    auto* plan_cmd = app.add_subcommand("plan", "synthesize a physical plan");
    plan_cmd->add_option("spec", plan_spec, "pipeline spec (JSON)")->required();
    plan_cmd->add_option("--out", plan_out, "write the plan to this file");

    // run
    xtp::pipe::RunOptions run_opts;
    std::string run_gateway, run_fixtures;
    auto* run_cmd = app.add_subcommand("run", "execute a pipeline");
    run_cmd->add_option("spec", run_opts.spec_path, "pipeline spec (JSON)")->required();
    run_cmd->add_option("inputs", run_opts.input_paths, "input documents")->required();
    run_cmd->add_option("--out", run_opts.out_dir, "artifact directory");
    run_cmd->add_option("--gateway", run_gateway, "live|fixture|record");
    run_cmd->add_option("--fixtures", run_fixtures, "fixture directory");
    run_cmd->add_option("--seed", run_opts.seed, "noise seed");

    // provenance
    std::string prov_trace;
    std::vector<std::string> prov_entities;
    auto* prov_cmd = app.add_subcommand("provenance", "query a trace for contributions");
    prov_cmd->add_option("trace", prov_trace, "trace file (.jsonl)")->required();
    prov_cmd->add_option("--entity", prov_entities, "source:start:end (repeatable)")
        ->required();

    // replay
    xtp::pipe::ReplayOptions replay_opts;
    auto* replay_cmd = app.add_subcommand("replay", "re-run downstream of a fix");
    replay_cmd->add_option("trace", replay_opts.trace_path, "trace file (.jsonl)")
        ->required();
    replay_cmd->add_option("--node", replay_opts.node, "node to fix")->required();
    replay_cmd->add_option("--fix", replay_opts.fix_path, "replacement output (JSON)")
        ->required();
    replay_cmd->add_option("--out", replay_opts.out_dir, "artifact directory");

    // fixtures record
    auto* fixtures_cmd = app.add_subcommand("fixtures", "fixture management");
    xtp::pipe::RunOptions record_opts;
    auto* record_cmd =
        fixtures_cmd->add_subcommand("record", "run live and persist responses");
    record_cmd->add_option("spec", record_opts.spec_path, "pipeline spec")->required();
    record_cmd->add_option("inputs", record_opts.input_paths, "input documents")
        ->required();
    record_cmd->add_option("--out", record_opts.out_dir, "artifact directory");
    record_cmd->add_option("--seed", record_opts.seed, "noise seed");

    CLI11_PARSE(app, argc, argv);

    if (*plan_cmd) {
        auto out = xtp::pipe::plan_pipeline(plan_spec);
        std::cout << out.document.dump(2) << "\n";
        if (!plan_out.empty()) {
            std::ofstream f(plan_out);
            f << out.document.dump(2) << "\n";
        }
        if (out.exit_code != 0) {
            std::cerr << "SLO infeasible; best achievable accuracy "
                      << out.document["best_achievable_accuracy"] << "\n";
        }
        return out.exit_code;
    }
    if (*run_cmd) {
        if (!run_gateway.empty()) run_opts.gateway_mode = run_gateway;
        if (!run_fixtures.empty()) run_opts.fixtures_dir = run_fixtures;
        auto out = xtp::pipe::run_pipeline(run_opts);
        if (out.exit_code != 0) {
            std::cerr << out.message << "\n";
        } else {
            std::cout << "ok: " << out.outputs.size() << " output(s) in "
                      << run_opts.out_dir << "\n";
        }
        return out.exit_code;
    }
    if (*prov_cmd) {
        std::vector<xtp::pipe::ProvenanceQuery> entities;
        for (const auto& e : prov_entities) {
            entities.push_back(xtp::pipe::parse_entity(e));
        }
        auto out = xtp::pipe::query_provenance(prov_trace, entities);
        std::cout << "contribution_bound: " << out.bound << "\n";
        for (const auto& id : out.elements) std::cout << "  " << id << "\n";
        return out.exit_code;
    }
    if (*replay_cmd) {
        auto out = xtp::pipe::replay_pipeline(replay_opts);
        if (out.exit_code != 0) {
            std::cerr << out.message << "\n";
        } else {
            std::cout << "ok: " << out.outputs.size() << " output(s) in "
                      << replay_opts.out_dir << "\n";
        }
        return out.exit_code;
    }
    if (*record_cmd) {
        record_opts.gateway_mode = "record";
        auto out = xtp::pipe::run_pipeline(record_opts);
        if (out.exit_code != 0) std::cerr << out.message << "\n";
        return out.exit_code;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return safe_main(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
