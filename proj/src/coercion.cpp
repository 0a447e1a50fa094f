#include "xtp/coercion.hpp"

#include <algorithm>
#include <deque>

namespace xtp {

namespace {

// "[col: val], [col: val]" per row, one row per line.
std::string flatten_rows(const sql::Relation& r) {
    std::string out;
    for (const auto& row : r.rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) line += ", ";
            line += "[" + r.columns[i] + ": " + sql::scalar_to_string(row[i]) + "]";
        }
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace

CoercionRegistry CoercionRegistry::builtin() {
    CoercionRegistry reg;
    reg.add({"flatten_table", false,
             [](const TypeTag& t) -> std::optional<TypeTag> {
                 if (t == TypeTag::make(BaseType::Table)) {
                     return TypeTag::make(BaseType::Text);
                 }
                 return std::nullopt;
             },
             [](const TypedValue& v) {
                 TypedValue out = v;
                 out.tag = TypeTag::make(BaseType::Text);
                 out.payload = TextDoc{flatten_rows(std::get<sql::Relation>(v.payload))};
                 return out;
             }});
    reg.add({"serialize_graph", false,
             [](const TypeTag& t) -> std::optional<TypeTag> {
                 if (t == TypeTag::make(BaseType::Graph)) {
                     return TypeTag::make(BaseType::Text);
                 }
                 return std::nullopt;
             },
             [](const TypedValue& v) {
                 TypedValue out = v;
                 out.tag = TypeTag::make(BaseType::Text);
                 out.payload = TextDoc{std::get<ops::PropertyGraph>(v.payload).to_text()};
                 return out;
             }});
    reg.add({"widen", false,
             [](const TypeTag& t) -> std::optional<TypeTag> {
                 if (t.refined()) return t.widened();
                 return std::nullopt;
             },
             [](const TypedValue& v) {
                 TypedValue out = v;
                 out.tag = v.tag.widened();
                 return out;
             }});
    return reg;
}

std::optional<CoercionChain> CoercionRegistry::find_coercion(
    const TypeTag& from, const TypeTag& to) const {
    if (is_subtype(from, to)) {
        return CoercionChain{{}, from, to, false};
    }
    // BFS over registered steps; registration order breaks length ties.
    struct Node {
        TypeTag tag;
        std::vector<std::string> steps;
        bool lossy;
    };
    std::deque<Node> queue{{from, {}, false}};
    std::vector<TypeTag> seen{from};
    while (!queue.empty()) {
        Node n = std::move(queue.front());
        queue.pop_front();
        if (static_cast<int>(n.steps.size()) >= kMaxChainLength) continue;
        for (const auto& c : coercions_) {
            auto next = c.step(n.tag);
            if (!next) continue;
            if (std::find(seen.begin(), seen.end(), *next) != seen.end()) continue;
            auto steps = n.steps;
            steps.push_back(c.id);
            bool lossy = n.lossy || c.lossy;
            if (is_subtype(*next, to)) {
                return CoercionChain{std::move(steps), from, to, lossy};
            }
            seen.push_back(*next);
            queue.push_back({*next, std::move(steps), lossy});
        }
    }
    return std::nullopt;
}

EdgePlan CoercionRegistry::typecheck_edge(const TypeTag& producer_out,
                                          const TypeTag& consumer_in) const {
    if (is_subtype(producer_out, consumer_in)) {
        return {EdgePlanKind::Direct, {}};
    }
    if (auto chain = find_coercion(producer_out, consumer_in)) {
        return {EdgePlanKind::Coerce, std::move(*chain)};
    }
    return {EdgePlanKind::Reject, {}};
}

const CoercionRegistry::Coercion& CoercionRegistry::find_step(
    const std::string& id) const {
    for (const auto& c : coercions_) {
        if (c.id == id) return c;
    }
    throw std::invalid_argument("unknown coercion: " + id);
}

TypedValue CoercionRegistry::apply(const CoercionChain& chain,
                                   const TypedValue& v) const {
    TypedValue out = v;
    for (const auto& id : chain.steps) {
        out = find_step(id).apply(out);
    }
    return out;
}

}  // namespace xtp
