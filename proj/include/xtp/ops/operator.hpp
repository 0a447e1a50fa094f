#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xtp/types.hpp"

namespace xtp::ops {

enum class OpKind { Neural, Symbolic, Hybrid };
enum class Binding { Preprogrammed, Fungible };
enum class ToolKind { ProcedureRef, ModelRef };

struct CostProfile {
    std::int64_t tokens_est = 0;   // 0 for symbolic candidates
    double latency_ms_est = 1.0;
    double accuracy_est = 1.0;     // in (0, 1]
};

struct ImplCandidate {
    std::string impl_id;
    ToolKind tool = ToolKind::ProcedureRef;
    std::string model_id;  // for ModelRef candidates
    CostProfile cost;
};

struct OperatorSpec {
    std::string name;
    OpKind kind = OpKind::Symbolic;
    Binding binding = Binding::Preprogrammed;
    TypeTag in_type;
    TypeTag out_type;
    std::vector<ImplCandidate> candidates;
    std::optional<std::string> intent_prompt;  // fungible ops only

    const ImplCandidate* find_candidate(const std::string& impl_id) const {
        for (const auto& c : candidates) {
            if (c.impl_id == impl_id) return &c;
        }
        return nullptr;
    }
};

// Preprogrammed ops carry exactly one candidate, fungible at least one;
// symbolic candidates must declare zero token cost. Throws
// std::invalid_argument on violation.
void check_operator_spec(const OperatorSpec& spec);

const char* to_string(OpKind k);
const char* to_string(Binding b);

}  // namespace xtp::ops
