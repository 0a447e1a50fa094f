#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xtp/coercion.hpp"
#include "xtp/ops/operator.hpp"

namespace xtp::flow {

enum class EdgeKind { Always, Predicate, Confidence, Broadcast, Loopback };

const char* to_string(EdgeKind k);
EdgeKind edge_kind_from_string(const std::string& s);

struct Edge {
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::Always;

    std::string predicate;                  // Predicate edges
    double threshold = 0.0;                 // Confidence edges, in (0,1)
    std::string fail_to;                    // Confidence edges
    std::optional<std::string> escalation;  // impl to switch to on reroute
    int max_retries = 3;                    // Confidence and Loopback edges

    std::optional<CoercionChain> coercion;  // materialized by build()
};

struct Node {
    std::string id;
    ops::OperatorSpec op;
    nlohmann::json params;  // operator-specific configuration
};

struct BuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Validated dataflow graph. Nodes keep declaration order; every edge carries
// its type-check result. Immutable during execution.
class FlowGraph {
public:
    static FlowGraph build(std::vector<Node> nodes, std::vector<Edge> edges,
                           const CoercionRegistry& registry);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::string>& entries() const { return entries_; }
    const std::vector<std::string>& exits() const { return exits_; }

    const Node& node(const std::string& id) const;
    const Node* find_node(const std::string& id) const;
    std::vector<const Edge*> out_edges(const std::string& id) const;
    // Forward (non-loopback) in-edges, in declaration order: these define a
    // node's input slots.
    std::vector<const Edge*> in_edges(const std::string& id) const;

    // Nodes reachable from `id` along forward edges, excluding `id` itself.
    std::vector<std::string> downstream_of(const std::string& id) const;

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::string> entries_;
    std::vector<std::string> exits_;
};

}  // namespace xtp::flow
