#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "xtp/flow/graph.hpp"
#include "xtp/flow/ledger.hpp"
#include "xtp/gw/gateway.hpp"
#include "xtp/plan/planner.hpp"

namespace xtp::flow {

struct ExecutionContext {
    gw::Gateway* gateway = nullptr;
    const CoercionRegistry* coercions = nullptr;
    std::map<std::string, std::string> sources;  // source_id -> document text
    std::uint64_t seed = 0;
    // Read-only view of the ledger being appended to, for operators that
    // derive provenance from earlier elements.
    const ProvenanceLedger* ledger = nullptr;
};

// What one operator invocation produced. The executor assigns value ids,
// appends the trace event, and registers origins/deletions under that
// event's invocation id.
struct InvokeResult {
    TypedValue output;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    double latency_ms = 0.0;  // 0 = let the executor measure wall time
    int warnings = 0;
    bool retry_requested = false;  // routes along a loopback edge
    nlohmann::json annotation;     // trace metadata (e.g. validation warnings)
    std::vector<std::pair<std::string, SourceSpan>> element_origins;
    std::vector<std::string> deleted_values;
};

using OpInvoker = std::function<InvokeResult(
    const Node& node, const std::string& impl_id,
    const std::vector<TypedValue>& inputs, ExecutionContext& ctx)>;

struct RetryExhausted : std::runtime_error {
    RetryExhausted(std::string node, int attempts, double last_confidence);
    std::string node;
    int attempts;
    double last_confidence;
};

struct GuardViolationError : std::runtime_error {
    GuardViolationError(std::string node, std::vector<Violation> violations);
    std::string node;
    std::vector<Violation> violations;
};

struct OperatorError : std::runtime_error {
    OperatorError(std::string node, std::int64_t invocation_id, const std::string& what);
    std::string node;
    std::int64_t invocation_id;
};

struct ReplayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic dataflow execution. Deliveries are processed in FIFO order;
// a node fires as soon as a delivery completes its input slot set (one slot
// per forward in-edge; entry nodes have a single external slot). Confidence
// edges gate the firing: a below-threshold output is withheld from every
// successor, one retry is consumed, and the fail_to node re-fires on its
// previous inputs (switching to the escalation impl when named). Exit
// outputs of Text or Report type must pass the projection guard.
std::vector<TypedValue> execute(const FlowGraph& g,
                                const std::vector<TypedValue>& inputs,
                                const plan::PhysicalPlan& plan,
                                const OpInvoker& invoke, ExecutionContext& ctx,
                                ProvenanceLedger& ledger);

struct ReplayResult {
    std::vector<TypedValue> outputs;
    ProvenanceLedger ledger;
};

// Re-executes only the nodes downstream of `from_node`, with `fix`
// substituted for that node's output; upstream events, values, origins, and
// deletions are copied verbatim.
ReplayResult replay(const FlowGraph& g, const ProvenanceLedger& original,
                    const std::string& from_node, const TypedValue& fix,
                    const plan::PhysicalPlan& plan, const OpInvoker& invoke,
                    ExecutionContext& ctx);

}  // namespace xtp::flow
