#include "xtp/flow/graph.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace xtp::flow {

const char* to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::Always: return "always";
        case EdgeKind::Predicate: return "predicate";
        case EdgeKind::Confidence: return "confidence";
        case EdgeKind::Broadcast: return "broadcast";
        case EdgeKind::Loopback: return "loopback";
    }
    return "?";
}

EdgeKind edge_kind_from_string(const std::string& s) {
    if (s == "always") return EdgeKind::Always;
    if (s == "predicate") return EdgeKind::Predicate;
    if (s == "confidence") return EdgeKind::Confidence;
    if (s == "broadcast") return EdgeKind::Broadcast;
    if (s == "loopback") return EdgeKind::Loopback;
    throw BuildError("unknown edge kind: " + s);
}

namespace {

// Forward reachability over non-loopback edges.
std::set<std::string> reach_from(const std::vector<Edge>& edges,
                                 const std::string& start) {
    std::set<std::string> seen;
    std::vector<std::string> stack{start};
    while (!stack.empty()) {
        std::string at = std::move(stack.back());
        stack.pop_back();
        for (const auto& e : edges) {
            if (e.kind == EdgeKind::Loopback) continue;
            if (e.from != at || seen.count(e.to)) continue;
            seen.insert(e.to);
            stack.push_back(e.to);
        }
    }
    return seen;
}

}  // namespace

FlowGraph FlowGraph::build(std::vector<Node> nodes, std::vector<Edge> edges,
                           const CoercionRegistry& registry) {
    FlowGraph g;
    g.nodes_ = std::move(nodes);
    g.edges_ = std::move(edges);

    std::set<std::string> ids;
    for (const auto& n : g.nodes_) {
        if (!ids.insert(n.id).second) throw BuildError("duplicate node id: " + n.id);
        ops::check_operator_spec(n.op);
    }
    for (auto& e : g.edges_) {
        if (!ids.count(e.from)) throw BuildError("edge from unknown node: " + e.from);
        if (!ids.count(e.to)) throw BuildError("edge to unknown node: " + e.to);
        if (e.kind == EdgeKind::Confidence) {
            if (!(e.threshold > 0.0 && e.threshold < 1.0)) {
                throw BuildError("confidence threshold out of (0,1) on edge " +
                                 e.from + " -> " + e.to);
            }
            if (!ids.count(e.fail_to)) {
                throw BuildError("confidence edge fail_to names unknown node: " +
                                 e.fail_to);
            }
        }
        if ((e.kind == EdgeKind::Confidence || e.kind == EdgeKind::Loopback) &&
            e.max_retries < 1) {
            throw BuildError("retry budget must be >= 1 on edge " + e.from +
                             " -> " + e.to);
        }
    }

    // Type-check every edge, materializing coercions.
    for (auto& e : g.edges_) {
        const Node& from = g.node(e.from);
        const Node& to = g.node(e.to);
        EdgePlan plan = registry.typecheck_edge(from.op.out_type, to.op.in_type);
        switch (plan.kind) {
            case EdgePlanKind::Direct:
                break;
            case EdgePlanKind::Coerce:
                e.coercion = plan.chain;
                break;
            case EdgePlanKind::Reject:
                throw BuildError("type error on edge " + e.from + " -> " + e.to +
                                 ": no path from " + from.op.out_type.str() +
                                 " to " + to.op.in_type.str());
        }
    }

    // Entries have no incoming forward edges; exits no outgoing ones.
    std::set<std::string> has_in, has_out;
    for (const auto& e : g.edges_) {
        if (e.kind == EdgeKind::Loopback) continue;
        has_in.insert(e.to);
        has_out.insert(e.from);
    }
    for (const auto& n : g.nodes_) {
        if (!has_in.count(n.id)) g.entries_.push_back(n.id);
        if (!has_out.count(n.id)) g.exits_.push_back(n.id);
    }
    if (g.entries_.empty()) throw BuildError("graph has no entry node");

    // Reachability from the entry set.
    std::set<std::string> reachable;
    for (const auto& entry : g.entries_) {
        reachable.insert(entry);
        auto r = reach_from(g.edges_, entry);
        reachable.insert(r.begin(), r.end());
    }
    for (const auto& n : g.nodes_) {
        if (!reachable.count(n.id)) {
            throw BuildError("node unreachable from any entry: " + n.id);
        }
    }

    // Forward edges must be acyclic so that "ancestor" is well defined.
    for (const auto& n : g.nodes_) {
        if (reach_from(g.edges_, n.id).count(n.id)) {
            throw BuildError("cycle through node " + n.id +
                             " (only loopback edges may go backwards)");
        }
    }

    // Loopback edges and confidence reroute targets point at the node itself
    // or an ancestor.
    auto is_self_or_ancestor = [&](const std::string& node,
                                   const std::string& target) {
        return target == node || reach_from(g.edges_, target).count(node) > 0;
    };
    for (const auto& e : g.edges_) {
        if (e.kind == EdgeKind::Loopback && !is_self_or_ancestor(e.from, e.to)) {
            throw BuildError("loopback edge " + e.from + " -> " + e.to +
                             " does not target its source or an ancestor");
        }
        if (e.kind == EdgeKind::Confidence &&
            !is_self_or_ancestor(e.from, e.fail_to)) {
            throw BuildError("confidence edge fail_to " + e.fail_to +
                             " is not " + e.from + " or an ancestor");
        }
    }
    return g;
}

const Node& FlowGraph::node(const std::string& id) const {
    const Node* n = find_node(id);
    if (!n) throw BuildError("unknown node: " + id);
    return *n;
}

const Node* FlowGraph::find_node(const std::string& id) const {
    for (const auto& n : nodes_) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

std::vector<const Edge*> FlowGraph::out_edges(const std::string& id) const {
    std::vector<const Edge*> out;
    for (const auto& e : edges_) {
        if (e.from == id) out.push_back(&e);
    }
    return out;
}

std::vector<const Edge*> FlowGraph::in_edges(const std::string& id) const {
    std::vector<const Edge*> in;
    for (const auto& e : edges_) {
        if (e.to == id && e.kind != EdgeKind::Loopback) in.push_back(&e);
    }
    return in;
}

std::vector<std::string> FlowGraph::downstream_of(const std::string& id) const {
    auto reach = reach_from(edges_, id);
    std::vector<std::string> out;
    for (const auto& n : nodes_) {
        if (n.id != id && reach.count(n.id)) out.push_back(n.id);
    }
    return out;
}

}  // namespace xtp::flow
