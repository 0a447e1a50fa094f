#include "xtp/plan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <nlohmann/json.hpp>

namespace xtp::plan {

SLO SLO::from_text(const std::string& text) {
    // e.g. "90%+ accuracy for 95% of the data"
    static const std::regex re(
        R"((\d+(?:\.\d+)?)%\+?\s*accuracy(?:\s+for\s+(\d+(?:\.\d+)?)%)?)",
        std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) {
        throw PlanError("cannot parse SLO text: " + text);
    }
    SLO slo;
    slo.accuracy_target = std::stod(m[1].str()) / 100.0;
    slo.coverage_fraction = m[2].matched ? std::stod(m[2].str()) / 100.0 : 1.0;
    return slo;
}

nlohmann::json PhysicalPlan::to_json() const {
    nlohmann::json stages_json = nlohmann::json::array();
    for (const auto& s : stages) stages_json.push_back(s);
    return {{"assignment", assignment},
            {"stages", stages_json},
            {"est",
             {{"tokens", est_tokens},
              {"latency_ms", est_latency_ms},
              {"accuracy", est_accuracy}}}};
}

PhysicalPlan PhysicalPlan::from_json(const nlohmann::json& j) {
    PhysicalPlan p;
    p.assignment = j.at("assignment").get<std::map<std::string, std::string>>();
    for (const auto& s : j.at("stages")) {
        p.stages.push_back(s.get<std::vector<std::string>>());
    }
    p.est_tokens = j.at("est").at("tokens").get<std::int64_t>();
    p.est_latency_ms = j.at("est").at("latency_ms").get<double>();
    p.est_accuracy = j.at("est").at("accuracy").get<double>();
    return p;
}

CostModel::CostModel(double alpha) : alpha_(alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) {
        throw PlanError("smoothing alpha must lie in (0,1)");
    }
}

void CostModel::observe(const flow::TraceEvent& event,
                        std::optional<double> accuracy_proxy) {
    double proxy = accuracy_proxy.value_or(event.confidence);
    double tokens = static_cast<double>(event.tokens_in + event.tokens_out);
    auto key = std::make_pair(event.node_id, event.impl_id);
    auto it = estimates_.find(key);
    if (it == estimates_.end() || it->second.observations == 0) {
        estimates_[key] = {proxy, event.latency_ms, tokens, 1};
    } else {
        auto& e = it->second;
        e.accuracy = (1.0 - alpha_) * e.accuracy + alpha_ * proxy;
        e.latency_ms = (1.0 - alpha_) * e.latency_ms + alpha_ * event.latency_ms;
        e.tokens = (1.0 - alpha_) * e.tokens + alpha_ * tokens;
        ++e.observations;
    }
    total_tokens_ += event.tokens_in + event.tokens_out;
}

CostModel::Estimate CostModel::estimate(const std::string& node_id,
                                        const ops::ImplCandidate& candidate) const {
    auto it = estimates_.find(std::make_pair(node_id, candidate.impl_id));
    if (it != estimates_.end() && it->second.observations > 0) return it->second;
    return {candidate.cost.accuracy_est, candidate.cost.latency_ms_est,
            static_cast<double>(candidate.cost.tokens_est), 0};
}

namespace {

struct Assignment {
    // candidate index per node, in graph node order
    std::vector<std::size_t> choice;
};

struct PlanCost {
    double accuracy = 1.0;
    double tokens = 0.0;
    double latency_ms = 0.0;
};

PlanCost cost_of(const flow::FlowGraph& g, const CostModel& model,
                 const std::vector<std::size_t>& choice,
                 const std::vector<std::vector<std::string>>& stages) {
    PlanCost c;
    std::map<std::string, double> node_latency;
    for (std::size_t i = 0; i < g.nodes().size(); ++i) {
        const auto& node = g.nodes()[i];
        const auto& cand = node.op.candidates.at(choice[i]);
        auto est = model.estimate(node.id, cand);
        c.accuracy *= est.accuracy;
        c.tokens += est.tokens;
        node_latency[node.id] = est.latency_ms;
    }
    // Stage latency is the max across the stage; stages run in sequence.
    for (const auto& stage : stages) {
        double m = 0.0;
        for (const auto& id : stage) m = std::max(m, node_latency[id]);
        c.latency_ms += m;
    }
    return c;
}

bool meets_budgets(const PlanCost& c, const SLO& slo) {
    if (slo.token_budget && c.tokens > static_cast<double>(*slo.token_budget)) {
        return false;
    }
    if (slo.latency_budget_ms && c.latency_ms > *slo.latency_budget_ms) return false;
    return true;
}

// Lexicographic impl_id comparison in node order; the deterministic tiebreak.
bool lex_less(const flow::FlowGraph& g, const std::vector<std::size_t>& a,
              const std::vector<std::size_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& cands = g.nodes()[i].op.candidates;
        const std::string& ia = cands.at(a[i]).impl_id;
        const std::string& ib = cands.at(b[i]).impl_id;
        if (ia != ib) return ia < ib;
    }
    return false;
}

PhysicalPlan materialize(const flow::FlowGraph& g, const CostModel& model,
                         const std::vector<std::size_t>& choice,
                         const std::vector<std::vector<std::string>>& stages) {
    PhysicalPlan plan;
    plan.stages = stages;
    for (std::size_t i = 0; i < g.nodes().size(); ++i) {
        plan.assignment[g.nodes()[i].id] =
            g.nodes()[i].op.candidates.at(choice[i]).impl_id;
    }
    PlanCost c = cost_of(g, model, choice, stages);
    plan.est_accuracy = c.accuracy;
    plan.est_tokens = static_cast<std::int64_t>(std::llround(c.tokens));
    plan.est_latency_ms = c.latency_ms;
    return plan;
}

}  // namespace

SynthesisResult synthesize(const flow::FlowGraph& g, const SLO& slo,
                           const CostModel& model) {
    const auto stages = schedule(g);
    const auto& nodes = g.nodes();

    std::int64_t space = 1;
    for (const auto& n : nodes) {
        if (n.op.candidates.empty()) {
            throw PlanError("node " + n.id + " has no implementation candidates");
        }
        space *= static_cast<std::int64_t>(n.op.candidates.size());
        if (space > kExhaustiveLimit) break;
    }

    std::vector<std::size_t> best_feasible, best_any;
    PlanCost best_feasible_cost, best_any_cost{-1.0, 0.0, 0.0};

    auto consider = [&](const std::vector<std::size_t>& choice) {
        PlanCost c = cost_of(g, model, choice, stages);
        if (best_any.empty() || c.accuracy > best_any_cost.accuracy ||
            (c.accuracy == best_any_cost.accuracy && lex_less(g, choice, best_any))) {
            best_any = choice;
            best_any_cost = c;
        }
        if (c.accuracy < slo.accuracy_target || !meets_budgets(c, slo)) return;
        if (best_feasible.empty() || c.tokens < best_feasible_cost.tokens ||
            (c.tokens == best_feasible_cost.tokens &&
             lex_less(g, choice, best_feasible))) {
            best_feasible = choice;
            best_feasible_cost = c;
        }
    };

    if (space <= kExhaustiveLimit) {
        std::vector<std::size_t> choice(nodes.size(), 0);
        while (true) {
            consider(choice);
            std::size_t i = 0;
            for (; i < nodes.size(); ++i) {
                if (++choice[i] < nodes.at(i).op.candidates.size()) break;
                choice[i] = 0;
            }
            if (i == nodes.size()) break;
        }
    } else {
        // Greedy: start from the cheapest candidates, repeatedly buy the
        // upgrade with the lowest token cost per accuracy gain.
        std::vector<std::size_t> choice(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            std::size_t pick = 0;
            for (std::size_t ci = 1; ci < nodes[i].op.candidates.size(); ++ci) {
                const auto& a = nodes[i].op.candidates[ci];
                const auto& b = nodes[i].op.candidates[pick];
                auto ea = model.estimate(nodes[i].id, a);
                auto eb = model.estimate(nodes[i].id, b);
                if (ea.tokens < eb.tokens ||
                    (ea.tokens == eb.tokens && a.impl_id < b.impl_id)) {
                    pick = ci;
                }
            }
            choice[i] = pick;
        }
        consider(choice);
        while (cost_of(g, model, choice, stages).accuracy < slo.accuracy_target) {
            double best_rate = 0.0;
            std::size_t swap_node = SIZE_MAX, swap_cand = 0;
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                auto cur = model.estimate(nodes[i].id, nodes[i].op.candidates[choice[i]]);
                for (std::size_t ci = 0; ci < nodes[i].op.candidates.size(); ++ci) {
                    if (ci == choice[i]) continue;
                    auto alt = model.estimate(nodes[i].id, nodes[i].op.candidates[ci]);
                    double gain = alt.accuracy - cur.accuracy;
                    if (gain <= 0.0) continue;
                    double rate = gain / std::max(1.0, alt.tokens - cur.tokens);
                    if (swap_node == SIZE_MAX || rate > best_rate) {
                        best_rate = rate;
                        swap_node = i;
                        swap_cand = ci;
                    }
                }
            }
            if (swap_node == SIZE_MAX) break;  // no accuracy left to buy
            choice[swap_node] = swap_cand;
            consider(choice);
        }
    }

    SynthesisResult result;
    result.best_accuracy = best_any_cost.accuracy;
    if (!best_feasible.empty()) {
        result.feasible = true;
        result.plan = materialize(g, model, best_feasible, stages);
    } else {
        result.feasible = false;
        result.plan = materialize(g, model, best_any, stages);
    }
    return result;
}

bool should_replan(const CostModel& model, const flow::FlowGraph& g,
                   const PhysicalPlan& plan, const SLO& slo) {
    double accuracy = 1.0;
    double tokens = 0.0;
    for (const auto& node : g.nodes()) {
        auto it = plan.assignment.find(node.id);
        if (it == plan.assignment.end()) continue;
        const auto* cand = node.op.find_candidate(it->second);
        if (!cand) continue;
        auto est = model.estimate(node.id, *cand);
        accuracy *= est.accuracy;
        tokens += est.tokens;
    }
    if (accuracy < slo.accuracy_target) return true;
    if (slo.token_budget) {
        double projected = std::max(
            tokens, static_cast<double>(model.total_observed_tokens()));
        if (projected > static_cast<double>(*slo.token_budget)) return true;
    }
    return false;
}

std::vector<std::vector<std::string>> schedule(const flow::FlowGraph& g) {
    // depth(n) = 1 + max depth over forward predecessors
    std::map<std::string, int> depth;
    const auto& nodes = g.nodes();
    std::size_t resolved = 0;
    while (resolved < nodes.size()) {
        bool progressed = false;
        for (const auto& n : nodes) {
            if (depth.count(n.id)) continue;
            int d = 0;
            bool ready = true;
            for (const auto* e : g.in_edges(n.id)) {
                auto it = depth.find(e->from);
                if (it == depth.end()) { ready = false; break; }
                d = std::max(d, it->second + 1);
            }
            if (ready) {
                depth[n.id] = d;
                ++resolved;
                progressed = true;
            }
        }
        if (!progressed) {
            throw PlanError("cycle among non-loopback edges");
        }
    }
    int max_depth = 0;
    for (const auto& [_, d] : depth) max_depth = std::max(max_depth, d);
    std::vector<std::vector<std::string>> stages(max_depth + 1);
    for (const auto& n : nodes) stages[depth[n.id]].push_back(n.id);
    return stages;
}

}  // namespace xtp::plan
