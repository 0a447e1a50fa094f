#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "xtp/types.hpp"
#include "xtp/value.hpp"

namespace xtp {

struct CoercionChain {
    std::vector<std::string> steps;  // coercion ids, in application order
    TypeTag from;
    TypeTag to;
    bool lossy = false;

    bool empty() const { return steps.empty(); }
    bool operator==(const CoercionChain&) const = default;
};

enum class EdgePlanKind { Direct, Coerce, Reject };

struct EdgePlan {
    EdgePlanKind kind = EdgePlanKind::Reject;
    CoercionChain chain;  // populated for Coerce, never empty there
};

// Deterministic type conversions. Coercions never invoke models; anything
// that needs inference is an operator. Immutable once built; reads are safe
// from any thread.
class CoercionRegistry {
public:
    static constexpr int kMaxChainLength = 2;

    struct Coercion {
        std::string id;
        bool lossy = false;
        // Returns the result tag when this step applies to `t`.
        std::function<std::optional<TypeTag>(const TypeTag&)> step;
        std::function<TypedValue(const TypedValue&)> apply;
    };

    // flatten_table, serialize_graph, and refinement widening.
    static CoercionRegistry builtin();

    void add(Coercion c) { coercions_.push_back(std::move(c)); }

    // Shortest chain of length <= kMaxChainLength whose result is a subtype
    // of `to`; ties broken by registration order. Identity (subtype) pairs
    // yield an empty chain.
    std::optional<CoercionChain> find_coercion(const TypeTag& from,
                                               const TypeTag& to) const;

    EdgePlan typecheck_edge(const TypeTag& producer_out,
                            const TypeTag& consumer_in) const;

    // Applies each step in order; the result's tag is a subtype of chain.to.
    TypedValue apply(const CoercionChain& chain, const TypedValue& v) const;

private:
    const Coercion& find_step(const std::string& id) const;
    std::vector<Coercion> coercions_;
};

}  // namespace xtp
