#include "xtp/ops/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace xtp::ops {

std::optional<double> Component::num_attr(const std::string& key) const {
    auto it = attrs.find(key);
    if (it == attrs.end()) return std::nullopt;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) {
        return static_cast<double>(*i);
    }
    if (const auto* d = std::get_if<double>(&it->second)) return *d;
    return std::nullopt;
}

const Component* PropertyGraph::find_by_label(const std::string& label) const {
    for (const auto& c : components) {
        if (c.effective_label() == label) return &c;
    }
    return nullptr;
}

const Component* PropertyGraph::find_by_id(int id) const {
    for (const auto& c : components) {
        if (c.id == id) return &c;
    }
    return nullptr;
}

nlohmann::json PropertyGraph::to_json() const {
    nlohmann::ordered_json j;
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : components) {
        nlohmann::ordered_json jc;
        jc["id"] = c.id;
        jc["type"] = c.ctype;
        if (c.label) jc["label"] = *c.label;
        for (const auto& [key, value] : c.attrs) {
            if (const auto* i = std::get_if<std::int64_t>(&value)) jc[key] = *i;
            else if (const auto* d = std::get_if<double>(&value)) jc[key] = *d;
            else jc[key] = std::get<std::string>(value);
        }
        j["components"].push_back(std::move(jc));
    }
    j["connections"] = nlohmann::ordered_json::array();
    for (const auto& con : connections) {
        j["connections"].push_back({{"from", con.from}, {"to", con.to}});
    }
    return j;
}

PropertyGraph PropertyGraph::from_json(const nlohmann::json& j) {
    PropertyGraph g;
    for (const auto& jc : j.at("components")) {
        Component c;
        c.id = jc.at("id").get<int>();
        c.ctype = jc.at("type").get<std::string>();
        if (jc.contains("label")) c.label = jc["label"].get<std::string>();
        for (const auto& [key, value] : jc.items()) {
            if (key == "id" || key == "type" || key == "label") continue;
            if (value.is_number_integer()) c.attrs[key] = value.get<std::int64_t>();
            else if (value.is_number_float()) c.attrs[key] = value.get<double>();
            else c.attrs[key] = value.get<std::string>();
        }
        g.components.push_back(std::move(c));
    }
    for (const auto& jc : j.at("connections")) {
        g.connections.push_back({jc.at("from").get<std::string>(),
                                 jc.at("to").get<std::string>()});
    }
    return g;
}

std::string PropertyGraph::to_text() const {
    return to_json().dump(2) + "\n";
}

PropertyGraph PropertyGraph::parse(const std::string& text) {
    return from_json(nlohmann::json::parse(text));
}

void check_graph(const PropertyGraph& g, bool circuit_refinement) {
    std::set<int> ids;
    std::set<std::string> labels;
    int power = 0, ground = 0;
    for (const auto& c : g.components) {
        if (!ids.insert(c.id).second) {
            throw GraphError("duplicate component id " + std::to_string(c.id));
        }
        if (!labels.insert(c.effective_label()).second) {
            throw GraphError("duplicate component label " + c.effective_label());
        }
        if (c.ctype == "power") ++power;
        if (c.ctype == "ground") ++ground;
    }
    for (const auto& con : g.connections) {
        if (!labels.count(con.from)) {
            throw GraphError("connection endpoint names no component: " + con.from);
        }
        if (!labels.count(con.to)) {
            throw GraphError("connection endpoint names no component: " + con.to);
        }
    }
    if (circuit_refinement) {
        if (power != 1) throw GraphError("circuit must have exactly one power component");
        if (ground != 1) throw GraphError("circuit must have exactly one ground component");
    }
}

namespace {

// All simple directed paths from `start` to any ground component, as label
// sequences. Iterative DFS; path state kept on an explicit stack.
std::vector<std::vector<std::string>> series_paths(const PropertyGraph& g,
                                                   const std::string& start) {
    std::multimap<std::string, std::string> adj;
    for (const auto& c : g.connections) adj.emplace(c.from, c.to);

    std::vector<std::vector<std::string>> paths;
    std::vector<std::vector<std::string>> stack;
    stack.push_back({start});
    while (!stack.empty()) {
        auto path = std::move(stack.back());
        stack.pop_back();
        const auto* comp = g.find_by_label(path.back());
        if (comp && comp->ctype == "ground") {
            paths.push_back(std::move(path));
            continue;
        }
        auto [lo, hi] = adj.equal_range(path.back());
        for (auto it = lo; it != hi; ++it) {
            if (std::find(path.begin(), path.end(), it->second) != path.end()) {
                continue;  // already on this path
            }
            auto next = path;
            next.push_back(it->second);
            stack.push_back(std::move(next));
        }
    }
    return paths;
}

}  // namespace

std::vector<Warning> validate_circuit(const PropertyGraph& g,
                                      const std::vector<ValidationRule>& rules) {
    check_graph(g, /*circuit_refinement=*/true);

    const Component* power = nullptr;
    for (const auto& c : g.components) {
        if (c.ctype == "power") power = &c;
    }
    auto paths = series_paths(g, power->effective_label());
    if (paths.empty()) throw GraphError("no series path from power to ground");

    std::set<int> leds_on_paths;
    std::vector<Warning> warnings;
    for (const auto& rule : rules) {
        auto v_source = power->num_attr(rule.v_source_key);
        if (!v_source) {
            throw GraphError("power component lacks attribute " + rule.v_source_key);
        }
        for (const auto& path : paths) {
            double r_total = 0.0;
            int resistors = 0;
            const Component* led = nullptr;
            int leds = 0;
            for (const auto& label : path) {
                const Component* c = g.find_by_label(label);
                if (c->ctype == "resistor") {
                    ++resistors;
                    if (auto r = c->num_attr(rule.resistance_key)) r_total += *r;
                } else if (c->ctype == "led") {
                    ++leds;
                    led = c;
                }
            }
            if (resistors < 1) throw GraphError("series path without a resistor");
            if (leds > 1) throw GraphError("series path with more than one LED");
            if (!led) continue;
            leds_on_paths.insert(led->id);
            double v_forward = led->num_attr(rule.v_forward_key).value_or(0.0);
            double current_mA = (*v_source - v_forward) / r_total * 1000.0;
            if (current_mA > rule.i_max_mA) {
                std::ostringstream msg;
                msg << "current " << current_mA << " mA through "
                    << led->effective_label() << " exceeds " << rule.i_max_mA
                    << " mA: too high for standard LED";
                warnings.push_back({rule.rule_id, led->id, msg.str(), current_mA});
            }
        }
    }
    for (const auto& c : g.components) {
        if (c.ctype == "led" && !leds_on_paths.count(c.id)) {
            throw GraphError("LED " + c.effective_label() +
                             " is not on any power-to-ground path");
        }
    }
    return warnings;
}

PropertyGraph add_redundancy(const PropertyGraph& g,
                             std::vector<std::pair<int, int>>* dup_map) {
    check_graph(g, /*circuit_refinement=*/false);

    const Component* sw = nullptr;
    for (const auto& c : g.components) {
        if (c.ctype == "switch") { sw = &c; break; }
    }
    if (!sw) throw GraphError("no switch component to branch from");

    // Walk the first downstream branch until ground.
    std::vector<const Component*> chain;
    std::set<std::string> seen{sw->effective_label()};
    std::string at = sw->effective_label();
    while (true) {
        const Connection* next = nullptr;
        for (const auto& con : g.connections) {
            if (con.from == at) { next = &con; break; }
        }
        if (!next) throw GraphError("switch branch does not reach ground");
        const Component* c = g.find_by_label(next->to);
        if (!c || seen.count(next->to)) {
            throw GraphError("switch branch does not reach ground");
        }
        seen.insert(next->to);
        at = next->to;
        if (c->ctype == "ground") break;
        chain.push_back(c);
    }
    if (chain.empty()) {
        throw GraphError("no components between switch and ground");
    }
    const std::string ground_label = at;

    PropertyGraph out = g;
    std::set<std::string> labels;
    for (const auto& c : out.components) labels.insert(c.effective_label());
    int next_id = 0;
    for (const auto& c : out.components) next_id = std::max(next_id, c.id);

    std::string prev = sw->effective_label();
    for (const Component* orig : chain) {
        Component dup = *orig;
        dup.id = ++next_id;
        std::string label = orig->effective_label() + "2";
        while (labels.count(label)) label += "2";
        labels.insert(label);
        dup.label = label;
        if (dup_map) dup_map->emplace_back(dup.id, orig->id);
        out.components.push_back(dup);
        out.connections.push_back({prev, label});
        prev = label;
    }
    out.connections.push_back({prev, ground_label});
    return out;
}

}  // namespace xtp::ops
