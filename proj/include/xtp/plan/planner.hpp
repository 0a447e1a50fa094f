#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xtp/flow/graph.hpp"
#include "xtp/flow/ledger.hpp"

namespace xtp::plan {

struct SLO {
    double accuracy_target = 0.9;    // in (0,1]
    double coverage_fraction = 1.0;  // in (0,1]
    std::optional<std::int64_t> token_budget;
    std::optional<double> latency_budget_ms;

    // Accepts phrasing like "90%+ accuracy for 95% of the data".
    static SLO from_text(const std::string& text);
};

struct PhysicalPlan {
    std::map<std::string, std::string> assignment;    // node -> impl
    std::vector<std::vector<std::string>> stages;     // mutually independent sets
    std::int64_t est_tokens = 0;
    double est_latency_ms = 0.0;
    double est_accuracy = 1.0;

    nlohmann::json to_json() const;
    static PhysicalPlan from_json(const nlohmann::json& j);
};

// Per-(node, impl) EMA of observed accuracy proxy, latency, and tokens.
// Until the first observation the candidate's declared estimates hold.
class CostModel {
public:
    explicit CostModel(double alpha = 0.2);

    struct Estimate {
        double accuracy = 1.0;
        double latency_ms = 1.0;
        double tokens = 0.0;
        std::int64_t observations = 0;
    };

    // EMA update x <- (1-alpha)x + alpha*obs; the first observation replaces
    // the estimate outright. The accuracy proxy defaults to the event's
    // confidence.
    void observe(const flow::TraceEvent& event,
                 std::optional<double> accuracy_proxy = std::nullopt);

    // Declared candidate costs when nothing has been observed yet.
    Estimate estimate(const std::string& node_id,
                      const ops::ImplCandidate& candidate) const;

    std::int64_t total_observed_tokens() const { return total_tokens_; }
    double alpha() const { return alpha_; }

private:
    double alpha_;
    std::map<std::pair<std::string, std::string>, Estimate> estimates_;
    std::int64_t total_tokens_ = 0;
};

struct SynthesisResult {
    PhysicalPlan plan;      // best feasible plan, or best achievable when not
    bool feasible = false;
    double best_accuracy = 0.0;  // max composed accuracy over all assignments
};

struct PlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Minimizes estimated token cost subject to composed accuracy (independent
// product over nodes) meeting the target and any budgets. Exhaustive search
// while the assignment space is at most kExhaustiveLimit; greedy
// cheapest-accuracy-gain upgrades beyond that. Deterministic: ties break on
// lexicographic impl_id in node order.
inline constexpr std::int64_t kExhaustiveLimit = 4096;

SynthesisResult synthesize(const flow::FlowGraph& g, const SLO& slo,
                           const CostModel& model);

// True when the plan no longer meets the SLO under current estimates: the
// recomputed accuracy product falls below target, or projected token spend
// exceeds the budget.
bool should_replan(const CostModel& model, const flow::FlowGraph& g,
                   const PhysicalPlan& plan, const SLO& slo);

// Longest-path layering over forward edges: minimal stage count, equal-depth
// nodes co-staged. Throws PlanError on a cycle among non-loopback edges.
std::vector<std::vector<std::string>> schedule(const flow::FlowGraph& g);

}  // namespace xtp::plan
