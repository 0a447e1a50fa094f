#pragma once

#include <map>
#include <string>

#include "xtp/flow/executor.hpp"
#include "xtp/gw/request.hpp"
#include "xtp/pipeline/spec.hpp"

namespace xtp::pipe {

// Prompt builders shared by the operators and the fixture tooling; fixtures
// key on the canonical request digest, so these must stay deterministic.
gw::ModelRequest schema_request(const std::string& model, const std::string& notes);
gw::ModelRequest triplets_request(const std::string& model, const std::string& notes);
gw::ModelRequest align_request(const std::string& model,
                               const std::string& schema_text,
                               const std::string& triplets_text);
gw::ModelRequest overprescription_request(const std::string& model,
                                          const std::string& schema_text);
gw::ModelRequest report_request(const std::string& model, const std::string& facts);
gw::ModelRequest extract_graph_request(const std::string& model,
                                       const std::string& diagram_standin);

// CSV rendering used in report sections (header row + one line per row).
std::string relation_to_csv(const sql::Relation& r);

// DOT rendering of a netlist for the diagram text artifact.
std::string netlist_to_dot(const ops::PropertyGraph& g);

// Built-in operator catalog: resolves pipeline NodeSpecs to operator specs
// and dispatches invocations.
class OperatorRegistry {
public:
    static const OperatorRegistry& builtin();

    bool has(const std::string& op_name) const;
    flow::Node make_node(const NodeSpec& spec) const;
    flow::OpInvoker invoker() const;

    // Graph construction for a whole pipeline spec.
    flow::FlowGraph build_graph(const PipelineSpec& spec,
                                const CoercionRegistry& coercions) const;

private:
    struct Entry {
        ops::OpKind kind = ops::OpKind::Symbolic;
        std::vector<ops::ImplCandidate> default_candidates;
        std::function<flow::InvokeResult(const flow::Node&, const std::string&,
                                         const std::vector<TypedValue>&,
                                         flow::ExecutionContext&)>
            invoke;
    };
    std::map<std::string, Entry> entries_;
};

}  // namespace xtp::pipe
