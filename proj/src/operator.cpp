#include "xtp/ops/operator.hpp"

#include <stdexcept>

namespace xtp::ops {

void check_operator_spec(const OperatorSpec& spec) {
    if (spec.binding == Binding::Preprogrammed && spec.candidates.size() != 1) {
        throw std::invalid_argument("preprogrammed operator " + spec.name +
                                    " must have exactly one candidate");
    }
    if (spec.candidates.empty()) {
        throw std::invalid_argument("operator " + spec.name + " has no candidates");
    }
    for (const auto& c : spec.candidates) {
        if (c.cost.accuracy_est <= 0.0 || c.cost.accuracy_est > 1.0) {
            throw std::invalid_argument("candidate " + c.impl_id +
                                        " accuracy out of range");
        }
        if (c.cost.tokens_est < 0) {
            throw std::invalid_argument("candidate " + c.impl_id +
                                        " negative token estimate");
        }
        if (c.cost.latency_ms_est <= 0.0) {
            throw std::invalid_argument("candidate " + c.impl_id +
                                        " nonpositive latency estimate");
        }
        if (spec.kind == OpKind::Symbolic && c.cost.tokens_est != 0) {
            throw std::invalid_argument("symbolic candidate " + c.impl_id +
                                        " must not consume tokens");
        }
    }
}

const char* to_string(OpKind k) {
    switch (k) {
        case OpKind::Neural: return "neural";
        case OpKind::Symbolic: return "symbolic";
        case OpKind::Hybrid: return "hybrid";
    }
    return "?";
}

const char* to_string(Binding b) {
    return b == Binding::Preprogrammed ? "preprogrammed" : "fungible";
}

}  // namespace xtp::ops
