#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xtp/pipeline/registry.hpp"

namespace xtp::pipe {

// Exit codes shared by the CLI surface.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitGuardViolation = 3;
inline constexpr int kExitRetryExhausted = 4;

struct RunOptions {
    std::string spec_path;
    std::vector<std::string> input_paths;
    std::string out_dir = "out";
    std::optional<std::string> gateway_mode;  // overrides the spec
    std::optional<std::string> fixtures_dir;  // overrides the spec
    std::uint64_t seed = 0;
};

struct RunOutcome {
    int exit_code = kExitOk;
    std::string message;
    std::vector<TypedValue> outputs;
    flow::ProvenanceLedger ledger;
    plan::PhysicalPlan plan;
    double coverage_observed = 0.0;
    int replans = 0;
};

// Builds, plans, executes, and writes artifacts (plan.json, trace.jsonl,
// report/diagram files, run_summary.json) under opts.out_dir.
RunOutcome run_pipeline(const RunOptions& opts);

struct PlanOutcome {
    int exit_code = kExitOk;
    nlohmann::json document;  // plan, or best-achievable report when infeasible
};

PlanOutcome plan_pipeline(const std::string& spec_path);

struct ProvenanceQuery {
    std::string source_id;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
};

struct ProvenanceOutcome {
    int exit_code = kExitOk;
    std::int64_t bound = 0;
    std::vector<std::string> elements;
};

ProvenanceOutcome query_provenance(const std::string& trace_path,
                                   const std::vector<ProvenanceQuery>& entities);

struct ReplayOptions {
    std::string trace_path;
    std::string node;
    std::string fix_path;
    std::string out_dir = "out";
};

RunOutcome replay_pipeline(const ReplayOptions& opts);

// Artifact helpers (also used by the test suites).
void write_artifacts(const std::vector<TypedValue>& outputs,
                     const std::string& out_dir);
ProvenanceQuery parse_entity(const std::string& text);  // "source:start:end"

}  // namespace xtp::pipe
