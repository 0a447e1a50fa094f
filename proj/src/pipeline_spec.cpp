#include "xtp/pipeline/spec.hpp"

#include <fstream>

namespace xtp::pipe {

PipelineSpec PipelineSpec::parse(const nlohmann::json& j) {
    PipelineSpec spec;
    spec.name = j.at("name").get<std::string>();
    for (const auto& jn : j.at("nodes")) {
        NodeSpec n;
        n.id = jn.at("id").get<std::string>();
        n.op = jn.at("op").get<std::string>();
        n.binding = jn.value("binding", "preprogrammed");
        n.in_type = jn.at("in").get<std::string>();
        n.out_type = jn.at("out").get<std::string>();
        n.params = jn.value("params", nlohmann::json::object());
        spec.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
        EdgeSpec e;
        e.from = je.at("from").get<std::string>();
        e.to = je.at("to").get<std::string>();
        e.kind = je.value("kind", "always");
        if (je.contains("threshold")) e.threshold = je["threshold"].get<double>();
        if (je.contains("fail_to")) e.fail_to = je["fail_to"].get<std::string>();
        if (je.contains("max_retries")) e.max_retries = je["max_retries"].get<int>();
        if (je.contains("escalation")) e.escalation = je["escalation"].get<std::string>();
        if (je.contains("predicate")) e.predicate = je["predicate"].get<std::string>();
        spec.edges.push_back(std::move(e));
    }
    const auto& js = j.at("slo");
    spec.slo.accuracy_target = js.at("accuracy").get<double>();
    spec.slo.coverage_fraction = js.value("coverage", 1.0);
    if (js.contains("token_budget")) {
        spec.slo.token_budget = js["token_budget"].get<std::int64_t>();
    }
    if (js.contains("latency_budget_ms")) {
        spec.slo.latency_budget_ms = js["latency_budget_ms"].get<double>();
    }
    if (spec.slo.accuracy_target <= 0.0 || spec.slo.accuracy_target > 1.0 ||
        spec.slo.coverage_fraction <= 0.0 || spec.slo.coverage_fraction > 1.0) {
        throw SpecError("SLO accuracy and coverage must lie in (0,1]");
    }
    spec.gateway_mode = j.value("gateway_mode", "fixture");
    if (j.contains("gateway")) {
        const auto& jg = j["gateway"];
        spec.fixtures_dir = jg.value("fixtures_dir", spec.fixtures_dir);
        spec.endpoint = jg.value("endpoint", "");
        spec.credential_env = jg.value("credential_env", "");
    }
    return spec;
}

PipelineSpec PipelineSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open pipeline spec: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SpecError("malformed pipeline spec " + path + ": " + e.what());
    }
    return parse(j);
}

nlohmann::json PipelineSpec::to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : this->nodes) {
        nodes.push_back({{"id", n.id},
                         {"op", n.op},
                         {"binding", n.binding},
                         {"in", n.in_type},
                         {"out", n.out_type},
                         {"params", n.params}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : this->edges) {
        nlohmann::json je = {{"from", e.from}, {"to", e.to}, {"kind", e.kind}};
        if (e.threshold) je["threshold"] = *e.threshold;
        if (e.fail_to) je["fail_to"] = *e.fail_to;
        if (e.max_retries) je["max_retries"] = *e.max_retries;
        if (e.escalation) je["escalation"] = *e.escalation;
        if (e.predicate) je["predicate"] = *e.predicate;
        edges.push_back(std::move(je));
    }
    nlohmann::json slo = {{"accuracy", this->slo.accuracy_target},
                          {"coverage", this->slo.coverage_fraction}};
    if (this->slo.token_budget) slo["token_budget"] = *this->slo.token_budget;
    if (this->slo.latency_budget_ms) {
        slo["latency_budget_ms"] = *this->slo.latency_budget_ms;
    }
    nlohmann::json j = {{"name", name},
                        {"nodes", nodes},
                        {"edges", edges},
                        {"slo", slo},
                        {"gateway_mode", gateway_mode}};
    nlohmann::json jg = nlohmann::json::object();
    if (!fixtures_dir.empty()) jg["fixtures_dir"] = fixtures_dir;
    if (!endpoint.empty()) jg["endpoint"] = endpoint;
    if (!credential_env.empty()) jg["credential_env"] = credential_env;
    j["gateway"] = jg;
    return j;
}

}  // namespace xtp::pipe
