#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace xtp::ops {

using Attr = std::variant<std::int64_t, double, std::string>;

struct Component {
    int id = 0;
    std::string ctype;                  // "power", "switch", "resistor", ...
    std::optional<std::string> label;
    std::map<std::string, Attr> attrs;  // voltage, resistance_ohm, forward_voltage

    bool operator==(const Component&) const = default;

    // Unlabeled components are addressed by their type name.
    const std::string& effective_label() const { return label ? *label : ctype; }

    std::optional<double> num_attr(const std::string& key) const;
};

struct Connection {
    std::string from;
    std::string to;
    bool operator==(const Connection&) const = default;
};

// Attributed connectivity graph extracted from a diagram. Connection
// endpoints name effective labels, which must be unique in the graph.
struct PropertyGraph {
    std::vector<Component> components;
    std::vector<Connection> connections;

    bool operator==(const PropertyGraph&) const = default;

    const Component* find_by_label(const std::string& label) const;
    const Component* find_by_id(int id) const;

    nlohmann::json to_json() const;
    static PropertyGraph from_json(const nlohmann::json& j);
    std::string to_text() const;  // canonical serialization (2-space indent)
    static PropertyGraph parse(const std::string& text);
};

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Throws GraphError describing the first violated structural invariant:
// duplicate ids/labels, dangling connection endpoints, or (for circuit
// graphs) a missing/multiple power or ground component.
void check_graph(const PropertyGraph& g, bool circuit_refinement);

struct ValidationRule {
    std::string rule_id = "led-current-limit";
    std::string v_source_key = "voltage";
    std::string v_forward_key = "forward_voltage";
    std::string resistance_key = "resistance_ohm";
    double i_max_mA = 20.0;  // conventional standard-LED rating
};

struct Warning {
    std::string rule_id;
    int component_id = 0;  // the LED on the offending path
    std::string message;
    double computed_mA = 0.0;
};

// Checks every power-to-ground series path that carries an LED:
//   I = (V_source - V_forward) / R_total
// and warns when I exceeds the rule's current limit. Requires at least one
// resistor and at most one LED per path; throws GraphError otherwise, and on
// malformed topology (no power, no ground, LED on no path).
std::vector<Warning> validate_circuit(const PropertyGraph& g,
                                      const std::vector<ValidationRule>& rules);

// Duplicates the series branch between the switch and ground: fresh ids,
// labels suffixed "2", plus connections switch -> first duplicate -> ... ->
// ground. Existing components and connections are preserved verbatim.
// `dup_map`, when given, receives (duplicate id, original id) pairs.
PropertyGraph add_redundancy(const PropertyGraph& g,
                             std::vector<std::pair<int, int>>* dup_map = nullptr);

}  // namespace xtp::ops
