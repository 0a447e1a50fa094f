#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xtp/plan/planner.hpp"

namespace xtp::pipe {

struct NodeSpec {
    std::string id;
    std::string op;                 // registered operator name
    std::string binding = "preprogrammed";
    std::string in_type;
    std::string out_type;
    nlohmann::json params = nlohmann::json::object();
};

struct EdgeSpec {
    std::string from;
    std::string to;
    std::string kind = "always";
    std::optional<double> threshold;
    std::optional<std::string> fail_to;
    std::optional<int> max_retries;
    std::optional<std::string> escalation;
    std::optional<std::string> predicate;
};

struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PipelineSpec {
    std::string name;
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;
    plan::SLO slo;
    std::string gateway_mode = "fixture";
    std::string fixtures_dir = "fixtures/gateway";
    std::string endpoint;
    std::string credential_env;

    static PipelineSpec parse(const nlohmann::json& j);
    static PipelineSpec load(const std::string& path);
    nlohmann::json to_json() const;
};

}  // namespace xtp::pipe
