#include "xtp/flow/executor.hpp"

#include <chrono>
#include <deque>
#include <set>
#include <sstream>

namespace xtp::flow {

RetryExhausted::RetryExhausted(std::string node_, int attempts_,
                               double last_confidence_)
    : std::runtime_error("retry budget exhausted at node " + node_ + " after " +
                         std::to_string(attempts_) + " attempts, last confidence " +
                         std::to_string(last_confidence_)),
      node(std::move(node_)),
      attempts(attempts_),
      last_confidence(last_confidence_) {}

GuardViolationError::GuardViolationError(std::string node_,
                                         std::vector<Violation> violations_)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "projection guard violation at node " << node_ << ":";
          for (const auto& v : violations_) {
              os << " \"" << v.value << "\" at [" << v.start << "," << v.end << ")";
          }
          return os.str();
      }()),
      node(std::move(node_)),
      violations(std::move(violations_)) {}

OperatorError::OperatorError(std::string node_, std::int64_t invocation_id_,
                             const std::string& what)
    : std::runtime_error("operator error at node " + node_ + " (event " +
                         std::to_string(invocation_id_) + "): " + what),
      node(std::move(node_)),
      invocation_id(invocation_id_) {}

namespace {

struct Meta {
    double confidence = 1.0;
    int warnings = 0;
    std::int64_t elements = 0;
    bool nonempty = false;
};

std::int64_t count_elements(const Payload& p) {
    if (const auto* r = std::get_if<sql::Relation>(&p)) {
        return static_cast<std::int64_t>(r->rows.size());
    }
    if (const auto* g = std::get_if<ops::PropertyGraph>(&p)) {
        return static_cast<std::int64_t>(g->components.size());
    }
    if (const auto* o = std::get_if<Opaque>(&p)) {
        return o->data.is_array() ? static_cast<std::int64_t>(o->data.size()) : 0;
    }
    if (const auto* r = std::get_if<Report>(&p)) {
        return static_cast<std::int64_t>(r->sections.size());
    }
    return 0;
}

bool payload_nonempty(const Payload& p) {
    if (const auto* t = std::get_if<TextDoc>(&p)) return !t->text.empty();
    if (const auto* d = std::get_if<DiagramSource>(&p)) return !d->body.empty();
    return count_elements(p) > 0;
}

// expr := "true" | "nonempty" | <field> <cmp> <number>
// field := confidence | warnings | elements
bool eval_predicate(const std::string& expr, const Meta& m) {
    std::istringstream in(expr);
    std::string field, op;
    double rhs = 0.0;
    in >> field;
    if (field == "true") return true;
    if (field == "nonempty") return m.nonempty;
    if (!(in >> op >> rhs)) {
        throw BuildError("malformed edge predicate: " + expr);
    }
    double lhs;
    if (field == "confidence") lhs = m.confidence;
    else if (field == "warnings") lhs = m.warnings;
    else if (field == "elements") lhs = static_cast<double>(m.elements);
    else throw BuildError("unknown predicate field: " + field);
    if (op == "<") return lhs < rhs;
    if (op == "<=") return lhs <= rhs;
    if (op == ">") return lhs > rhs;
    if (op == ">=") return lhs >= rhs;
    if (op == "==") return lhs == rhs;
    if (op == "!=") return lhs != rhs;
    throw BuildError("unknown predicate operator: " + op);
}

class Engine {
public:
    Engine(const FlowGraph& g, const plan::PhysicalPlan& plan,
           const OpInvoker& invoke, ExecutionContext& ctx, ProvenanceLedger& ledger)
        : g_(g), plan_(plan), invoke_(invoke), ctx_(ctx), ledger_(ledger) {
        for (const auto& n : g_.nodes()) {
            std::size_t nslots = g_.in_edges(n.id).size();
            slots_[n.id].assign(std::max<std::size_t>(1, nslots), std::nullopt);
        }
    }

    std::int64_t value_counter = 0;

    std::string fresh_id() { return "v" + std::to_string(value_counter++); }

    std::string register_value(const TypedValue& v) {
        std::string id = fresh_id();
        ledger_.record_value(id, v);
        return id;
    }

    void prefill_slot(const std::string& node, std::size_t slot,
                      const std::string& vid) {
        slots_.at(node).at(slot) = vid;
    }

    void seed_external(const TypedValue& input) {
        std::string vid = register_value(input);
        for (const auto& entry : g_.entries()) {
            queue_.push_back(Deliver{entry, 0, vid});
        }
    }

    // Routes an already-recorded value along a node's out-edges without
    // re-invoking the node (replay seeding).
    void seed_from_node(const std::string& node, const std::string& vid) {
        const TypedValue& v = *ledger_.find_value(vid);
        for (const auto* e : g_.out_edges(node)) {
            if (e->kind == EdgeKind::Loopback) continue;
            if (e->kind == EdgeKind::Confidence && v.confidence < e->threshold) {
                throw ReplayError("fix confidence " + std::to_string(v.confidence) +
                                  " is below the threshold on edge " + e->from +
                                  " -> " + e->to);
            }
            if (e->kind == EdgeKind::Predicate) {
                Meta m{v.confidence, 0, count_elements(v.payload),
                       payload_nonempty(v.payload)};
                if (!eval_predicate(e->predicate, m)) continue;
            }
            deliver(*e, vid);
        }
    }

    void run() {
        while (!queue_.empty()) {
            Item item = std::move(queue_.front());
            queue_.pop_front();
            if (auto* d = std::get_if<Deliver>(&item)) {
                auto& nslots = slots_.at(d->node);
                nslots.at(d->slot) = d->vid;
                bool ready = true;
                for (const auto& s : nslots) {
                    if (!s) { ready = false; break; }
                }
                if (!ready) continue;
                std::vector<std::string> vids;
                for (const auto& s : nslots) vids.push_back(*s);
                last_inputs_[d->node] = vids;
                fire(d->node, vids);
            } else {
                const auto& f = std::get<Fire>(item);
                fire(f.node, last_inputs_.at(f.node));
            }
        }
    }

    std::vector<TypedValue> collect_outputs() const {
        std::vector<TypedValue> out;
        for (const auto& exit : g_.exits()) {
            auto it = exit_outputs_.find(exit);
            if (it == exit_outputs_.end()) continue;
            out.insert(out.end(), it->second.begin(), it->second.end());
        }
        return out;
    }

    const std::map<std::string, std::vector<TypedValue>>& exit_outputs() const {
        return exit_outputs_;
    }

private:
    struct Deliver {
        std::string node;
        std::size_t slot;
        std::string vid;
    };
    struct Fire {
        std::string node;
    };
    using Item = std::variant<Deliver, Fire>;

    std::string impl_for(const Node& node) {
        auto esc = escalation_.find(node.id);
        if (esc != escalation_.end()) return esc->second;
        auto it = plan_.assignment.find(node.id);
        if (it != plan_.assignment.end()) return it->second;
        return node.op.candidates.front().impl_id;
    }

    void fire(const std::string& node_id, const std::vector<std::string>& vids) {
        const Node& node = g_.node(node_id);
        std::vector<TypedValue> inputs;
        for (const auto& vid : vids) {
            const TypedValue* v = ledger_.find_value(vid);
            if (!v) throw OperatorError(node_id, 0, "missing input value " + vid);
            inputs.push_back(*v);
        }
        std::string impl = impl_for(node);
        if (!node.op.find_candidate(impl)) {
            throw OperatorError(node_id, 0, "impl " + impl + " is not a candidate");
        }

        InvokeResult result;
        auto start = std::chrono::steady_clock::now();
        try {
            result = invoke_(node, impl, inputs, ctx_);
        } catch (const gw::GatewayError&) {
            throw;  // fixture misses and transport failures surface as-is
        } catch (const std::exception& e) {
            TraceEvent ev;
            ev.node_id = node_id;
            ev.impl_id = impl;
            ev.input_ids = vids;
            ev.confidence = 0.0;
            ev.outcome = Outcome::Error;
            std::int64_t id = ledger_.append(ev);
            throw OperatorError(node_id, id, e.what());
        }
        if (result.latency_ms == 0.0) {
            result.latency_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
        }

        if (!payload_matches_tag(result.output.tag, result.output.payload)) {
            throw OperatorError(node_id, 0,
                                "payload inconsistent with tag " +
                                    result.output.tag.str());
        }
        if (!is_subtype(result.output.tag, node.op.out_type)) {
            throw OperatorError(node_id, 0,
                                "output type " + result.output.tag.str() +
                                    " is not a subtype of declared " +
                                    node.op.out_type.str());
        }

        std::int64_t ev_id = ledger_.next_invocation_id();
        result.output.provenance.invocations.push_back(ev_id);
        std::string out_vid = register_value(result.output);

        // A failing confidence gate withholds the output from every
        // successor and re-fires the fail_to node instead.
        const Edge* failed_gate = nullptr;
        for (const auto* e : g_.out_edges(node_id)) {
            if (e->kind == EdgeKind::Confidence &&
                result.output.confidence < e->threshold) {
                failed_gate = e;
                break;
            }
        }
        const Edge* loop_edge = nullptr;
        if (!failed_gate && result.retry_requested) {
            for (const auto* e : g_.out_edges(node_id)) {
                if (e->kind == EdgeKind::Loopback) { loop_edge = e; break; }
            }
            if (!loop_edge) {
                throw OperatorError(node_id, 0,
                                    "operator requested a retry but the node has "
                                    "no loopback edge");
            }
        }
        bool rerouting = failed_gate || loop_edge;

        TraceEvent ev;
        ev.node_id = node_id;
        ev.impl_id = impl;
        ev.input_ids = vids;
        ev.output_ids = {out_vid};
        ev.tokens_in = result.tokens_in;
        ev.tokens_out = result.tokens_out;
        ev.latency_ms = result.latency_ms;
        ev.confidence = result.output.confidence;
        ev.outcome = rerouting ? Outcome::Rerouted : Outcome::Ok;

        if (rerouting) {
            const Edge* e = failed_gate ? failed_gate : loop_edge;
            int& used = retries_[e];
            if (used >= e->max_retries) {
                ev.outcome = Outcome::Error;
                ledger_.append(ev);
                throw RetryExhausted(node_id, used + 1, result.output.confidence);
            }
            ++used;
        }

        std::int64_t id = ledger_.append(ev);
        if (!result.annotation.is_null()) ledger_.annotate(id, result.annotation);
        for (const auto& [element, span] : result.element_origins) {
            ledger_.add_element_origin(element, span, id);
        }
        for (const auto& value : result.deleted_values) {
            ledger_.add_deleted_value(value, id);
        }

        if (rerouting) {
            const std::string& target =
                failed_gate ? failed_gate->fail_to : loop_edge->to;
            if (failed_gate && failed_gate->escalation) {
                escalation_[target] = *failed_gate->escalation;
            }
            if (!last_inputs_.count(target)) {
                throw OperatorError(node_id, id,
                                    "reroute target " + target + " has not fired");
            }
            queue_.push_back(Fire{target});
            return;
        }

        Meta meta{result.output.confidence, result.warnings,
                  count_elements(result.output.payload),
                  payload_nonempty(result.output.payload)};

        bool has_forward = false;
        for (const auto* e : g_.out_edges(node_id)) {
            if (e->kind == EdgeKind::Loopback) continue;
            has_forward = true;
            if (e->kind == EdgeKind::Predicate &&
                !eval_predicate(e->predicate, meta)) {
                continue;
            }
            deliver(*e, out_vid);
        }
        if (!has_forward) {
            guard_exit(node_id, result.output);
            exit_outputs_[node_id].push_back(result.output);
        }
    }

    void deliver(const Edge& e, const std::string& vid) {
        std::string delivered = vid;
        if (e.coercion && !e.coercion->empty()) {
            const TypedValue& v = *ledger_.find_value(vid);
            TypedValue coerced = ctx_.coercions->apply(*e.coercion, v);
            delivered = register_value(coerced);
        }
        auto in = g_.in_edges(e.to);
        std::size_t slot = 0;
        for (; slot < in.size(); ++slot) {
            if (in[slot] == &e) break;
        }
        queue_.push_back(Deliver{e.to, slot, delivered});
    }

    void guard_exit(const std::string& node_id, const TypedValue& v) {
        const auto& registry = ledger_.deleted_values();
        if (registry.empty()) return;
        std::vector<Violation> violations;
        if (const auto* t = std::get_if<TextDoc>(&v.payload)) {
            violations = guard_projection(t->text, registry);
        } else if (const auto* r = std::get_if<Report>(&v.payload)) {
            for (const auto& section : r->sections) {
                if (section.kind != SectionKind::Text) continue;
                auto found = guard_projection(section.content, registry);
                violations.insert(violations.end(), found.begin(), found.end());
            }
        }
        if (!violations.empty()) {
            throw GuardViolationError(node_id, std::move(violations));
        }
    }

    const FlowGraph& g_;
    const plan::PhysicalPlan& plan_;
    const OpInvoker& invoke_;
    ExecutionContext& ctx_;
    ProvenanceLedger& ledger_;

    std::deque<Item> queue_;
    std::map<std::string, std::vector<std::optional<std::string>>> slots_;
    std::map<std::string, std::vector<std::string>> last_inputs_;
    std::map<const Edge*, int> retries_;
    std::map<std::string, std::string> escalation_;
    std::map<std::string, std::vector<TypedValue>> exit_outputs_;
};

std::int64_t max_value_counter(const ProvenanceLedger& ledger) {
    std::int64_t maxn = -1;
    for (const auto& [id, _] : ledger.values()) {
        if (id.size() > 1 && id[0] == 'v') {
            try {
                maxn = std::max(maxn,
                                static_cast<std::int64_t>(std::stoll(id.substr(1))));
            } catch (...) {
            }
        }
    }
    return maxn + 1;
}

}  // namespace

std::vector<TypedValue> execute(const FlowGraph& g,
                                const std::vector<TypedValue>& inputs,
                                const plan::PhysicalPlan& plan,
                                const OpInvoker& invoke, ExecutionContext& ctx,
                                ProvenanceLedger& ledger) {
    ctx.ledger = &ledger;
    Engine engine(g, plan, invoke, ctx, ledger);
    engine.value_counter = max_value_counter(ledger);
    for (const auto& input : inputs) {
        if (!payload_matches_tag(input.tag, input.payload)) {
            throw BuildError("input payload inconsistent with tag " + input.tag.str());
        }
        engine.seed_external(input);
    }
    engine.run();
    return engine.collect_outputs();
}

ReplayResult replay(const FlowGraph& g, const ProvenanceLedger& original,
                    const std::string& from_node, const TypedValue& fix,
                    const plan::PhysicalPlan& plan, const OpInvoker& invoke,
                    ExecutionContext& ctx) {
    const Node* node = g.find_node(from_node);
    if (!node) throw ReplayError("unknown node: " + from_node);
    const TraceEvent* anchor = original.last_event_of(from_node);
    if (!anchor) throw ReplayError("no recorded event for node " + from_node);
    if (!is_subtype(fix.tag, node->op.out_type)) {
        throw ReplayError("fix type " + fix.tag.str() +
                          " is incompatible with node output type " +
                          node->op.out_type.str());
    }

    auto downstream = g.downstream_of(from_node);
    std::set<std::string> closure(downstream.begin(), downstream.end());

    ReplayResult rr;
    std::set<std::int64_t> copied_events;
    std::set<std::string> closure_outputs;
    for (const auto& e : original.events()) {
        if (closure.count(e.node_id)) {
            for (const auto& id : e.output_ids) closure_outputs.insert(id);
        } else {
            rr.ledger.copy_event(e);
            copied_events.insert(e.invocation_id);
        }
    }
    for (const auto& [id, v] : original.values()) {
        if (!closure_outputs.count(id)) rr.ledger.record_value(id, v);
    }
    for (const auto& rec : original.origin_log()) {
        if (copied_events.count(rec.invocation_id)) {
            rr.ledger.add_element_origin(rec.element_id, rec.span, rec.invocation_id);
        }
    }
    for (const auto& [value, inv] : original.deleted_values().entries()) {
        if (copied_events.count(inv)) rr.ledger.add_deleted_value(value, inv);
    }
    for (const auto& [inv, data] : original.annotations()) {
        if (copied_events.count(inv)) rr.ledger.annotate(inv, data);
    }

    ctx.ledger = &rr.ledger;
    Engine engine(g, plan, invoke, ctx, rr.ledger);
    engine.value_counter = max_value_counter(original);

    TypedValue fixed = fix;
    fixed.provenance.invocations.push_back(anchor->invocation_id);
    std::string fix_vid = engine.register_value(fixed);

    // Inputs that come from outside the re-executed region keep their
    // original values; slots fed by re-executed nodes (or the fix) fill as
    // deliveries arrive.
    for (const auto& cid : closure) {
        const TraceEvent* ev = original.last_event_of(cid);
        if (!ev) continue;
        auto in = g.in_edges(cid);
        for (std::size_t i = 0; i < in.size() && i < ev->input_ids.size(); ++i) {
            if (closure.count(in[i]->from) || in[i]->from == from_node) continue;
            if (!rr.ledger.find_value(ev->input_ids[i])) continue;
            engine.prefill_slot(cid, i, ev->input_ids[i]);
        }
    }

    engine.seed_from_node(from_node, fix_vid);
    engine.run();

    // Assemble outputs in exit order: re-executed exits from this run,
    // untouched exits from the original ledger.
    for (const auto& exit : g.exits()) {
        if (exit == from_node) {
            rr.outputs.push_back(fixed);
        } else if (closure.count(exit)) {
            auto it = engine.exit_outputs().find(exit);
            if (it != engine.exit_outputs().end()) {
                rr.outputs.insert(rr.outputs.end(), it->second.begin(),
                                  it->second.end());
            }
        } else if (const TraceEvent* ev = original.last_event_of(exit)) {
            if (!ev->output_ids.empty()) {
                if (const TypedValue* v = original.find_value(ev->output_ids[0])) {
                    rr.outputs.push_back(*v);
                }
            }
        }
    }
    return rr;
}

}  // namespace xtp::flow
