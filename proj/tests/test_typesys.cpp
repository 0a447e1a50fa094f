#include <doctest.h>

#include <map>
#include <set>

#include "xtp/coercion.hpp"
#include "xtp/types.hpp"

using namespace xtp;

namespace {

// Every tag the lattice tests range over: all bases, plus refinements on the
// refinable ones.
std::vector<TypeTag> tag_universe() {
    std::vector<TypeTag> tags;
    const BaseType bases[] = {
        BaseType::Unstructured, BaseType::Text,   BaseType::Image,
        BaseType::Structured,   BaseType::Table,  BaseType::Graph,
        BaseType::Report,       BaseType::DiagramSource};
    for (auto b : bases) {
        tags.push_back(TypeTag::make(b));
        if (base_refinable(b)) {
            tags.push_back(TypeTag::make(b, "Circuit"));
            tags.push_back(TypeTag::make(b, "CircuitUS"));
            tags.push_back(TypeTag::make(b, "Clinical"));
        }
    }
    return tags;
}

// Independent oracle: the subtype relation written as an edge set, closed
// under transitivity by brute force.
std::set<std::pair<std::string, std::string>> closure_oracle(
    const std::vector<TypeTag>& tags) {
    std::set<std::pair<std::string, std::string>> rel;
    for (const auto& a : tags) rel.insert({a.str(), a.str()});
    for (const auto& a : tags) {
        if (a.refined()) rel.insert({a.str(), a.widened().str()});
        if (a.base == BaseType::Text || a.base == BaseType::Image) {
            rel.insert({a.str(), "Unstructured"});
        }
        if (a.base == BaseType::Table || a.base == BaseType::Graph) {
            rel.insert({a.str(), "Structured"});
        }
    }
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& [a, b] : std::set(rel)) {
            for (const auto& [c, d] : std::set(rel)) {
                if (b == c && !rel.count({a, d})) {
                    rel.insert({a, d});
                    grew = true;
                }
            }
        }
    }
    return rel;
}

TypedValue value_of(const TypeTag& tag) {
    TypedValue v;
    v.tag = tag;
    switch (tag.base) {
        case BaseType::Table:
            v.payload = sql::Relation{"t", {"a"}, {{sql::Scalar{std::int64_t{1}}}}};
            break;
        case BaseType::Graph: {
            ops::PropertyGraph g;
            g.components = {{1, "power", "V+", {}}};
            v.payload = std::move(g);
            break;
        }
        case BaseType::Report:
            v.payload = Report{{{SectionKind::Text, "x"}}};
            break;
        case BaseType::DiagramSource:
            v.payload = DiagramSource{"xtp-netlist/1", "{}"};
            break;
        case BaseType::Structured:
            v.payload = Opaque{"blob", nlohmann::json::object()};
            break;
        default:
            v.payload = TextDoc{"text"};
            break;
    }
    return v;
}

}  // namespace

TEST_CASE("tag parsing round-trips and rejects malformed tags") {
    CHECK(TypeTag::parse("Graph<Circuit>") == TypeTag::make(BaseType::Graph, "Circuit"));
    CHECK(TypeTag::parse("Text").str() == "Text");
    CHECK(TypeTag::parse("Graph<Circuit>").str() == "Graph<Circuit>");
    CHECK_THROWS_AS(TypeTag::parse("Blob"), std::invalid_argument);
    CHECK_THROWS_AS(TypeTag::parse("Unstructured<X>"), std::invalid_argument);
    CHECK_THROWS_AS(TypeTag::parse("Graph<>"), std::invalid_argument);
}

TEST_CASE("basic subtype judgments") {
    CHECK(is_subtype(TypeTag::make(BaseType::Text), TypeTag::make(BaseType::Unstructured)));
    CHECK(is_subtype(TypeTag::make(BaseType::Image), TypeTag::make(BaseType::Unstructured)));
    CHECK(is_subtype(TypeTag::make(BaseType::Graph, "CircuitUS"),
                     TypeTag::make(BaseType::Graph, "CircuitUS")));
    CHECK(is_subtype(TypeTag::make(BaseType::Graph, "Circuit"),
                     TypeTag::make(BaseType::Graph)));
    CHECK(is_subtype(TypeTag::make(BaseType::Table), TypeTag::make(BaseType::Structured)));
    CHECK_FALSE(is_subtype(TypeTag::make(BaseType::Graph),
                           TypeTag::make(BaseType::Graph, "Circuit")));
    CHECK_FALSE(is_subtype(TypeTag::make(BaseType::Structured),
                           TypeTag::make(BaseType::Table)));
    CHECK_FALSE(is_subtype(TypeTag::make(BaseType::Graph, "CircuitUS"),
                           TypeTag::make(BaseType::Graph, "CircuitCA")));
    CHECK_FALSE(is_subtype(TypeTag::make(BaseType::Report),
                           TypeTag::make(BaseType::Unstructured)));
}

TEST_CASE("is_subtype matches the brute-force transitive closure") {
    auto tags = tag_universe();
    auto oracle = closure_oracle(tags);
    for (const auto& a : tags) {
        for (const auto& b : tags) {
            CAPTURE(a.str());
            CAPTURE(b.str());
            CHECK(is_subtype(a, b) == (oracle.count({a.str(), b.str()}) > 0));
        }
    }
}

TEST_CASE("is_subtype is a partial order over the full lattice") {
    auto tags = tag_universe();
    for (const auto& a : tags) CHECK(is_subtype(a, a));
    for (const auto& a : tags) {
        for (const auto& b : tags) {
            if (is_subtype(a, b) && is_subtype(b, a)) CHECK(a == b);
        }
    }
    for (const auto& a : tags) {
        for (const auto& b : tags) {
            if (!is_subtype(a, b)) continue;
            for (const auto& c : tags) {
                if (is_subtype(b, c)) {
                    CAPTURE(a.str());
                    CAPTURE(b.str());
                    CAPTURE(c.str());
                    CHECK(is_subtype(a, c));
                }
            }
        }
    }
}

TEST_CASE("find_coercion built-ins") {
    auto reg = CoercionRegistry::builtin();

    auto chain = reg.find_coercion(TypeTag::make(BaseType::Table),
                                   TypeTag::make(BaseType::Text));
    REQUIRE(chain.has_value());
    CHECK(chain->steps == std::vector<std::string>{"flatten_table"});
    CHECK_FALSE(chain->lossy);

    auto identity = reg.find_coercion(TypeTag::make(BaseType::Graph, "Circuit"),
                                      TypeTag::make(BaseType::Graph, "Circuit"));
    REQUIRE(identity.has_value());
    CHECK(identity->empty());

    // Extraction is an operator, never a coercion.
    CHECK_FALSE(reg.find_coercion(TypeTag::make(BaseType::Image),
                                  TypeTag::make(BaseType::Table))
                    .has_value());
    CHECK_FALSE(reg.find_coercion(TypeTag::make(BaseType::Text),
                                  TypeTag::make(BaseType::Graph))
                    .has_value());

    // Refined table needs the widening hop first.
    auto two_step = reg.find_coercion(TypeTag::make(BaseType::Table, "Clinical"),
                                      TypeTag::make(BaseType::Text));
    REQUIRE(two_step.has_value());
    CHECK(two_step->steps == std::vector<std::string>{"widen", "flatten_table"});
}

TEST_CASE("every returned chain composes to a subtype of the target") {
    auto reg = CoercionRegistry::builtin();
    auto tags = tag_universe();
    for (const auto& from : tags) {
        for (const auto& to : tags) {
            auto chain = reg.find_coercion(from, to);
            if (!chain) continue;
            CHECK(chain->steps.size() <= CoercionRegistry::kMaxChainLength);
            TypedValue v = value_of(from);
            TypedValue out = reg.apply(*chain, v);
            CAPTURE(from.str());
            CAPTURE(to.str());
            CHECK(is_subtype(out.tag, to));
            CHECK(payload_matches_tag(out.tag, out.payload));
        }
    }
}

TEST_CASE("typecheck_edge covers direct, coerce, and reject") {
    auto reg = CoercionRegistry::builtin();

    auto direct = reg.typecheck_edge(TypeTag::make(BaseType::Graph, "Circuit"),
                                     TypeTag::make(BaseType::Graph));
    CHECK(direct.kind == EdgePlanKind::Direct);

    auto coerce = reg.typecheck_edge(TypeTag::make(BaseType::Table),
                                     TypeTag::make(BaseType::Text));
    CHECK(coerce.kind == EdgePlanKind::Coerce);
    CHECK(coerce.chain.steps == std::vector<std::string>{"flatten_table"});

    auto reject = reg.typecheck_edge(TypeTag::make(BaseType::Text),
                                     TypeTag::make(BaseType::Graph));
    CHECK(reject.kind == EdgePlanKind::Reject);
}

TEST_CASE("typecheck_edge never returns coerce with an empty chain") {
    auto reg = CoercionRegistry::builtin();
    auto tags = tag_universe();
    for (const auto& a : tags) {
        for (const auto& b : tags) {
            auto plan = reg.typecheck_edge(a, b);
            if (plan.kind == EdgePlanKind::Coerce) {
                CHECK_FALSE(plan.chain.empty());
                CHECK_FALSE(is_subtype(a, b));
            }
        }
    }
}

TEST_CASE("flatten_table produces the bracketed row text") {
    auto reg = CoercionRegistry::builtin();
    TypedValue v;
    v.tag = TypeTag::make(BaseType::Table);
    v.payload = sql::Relation{
        "med",
        {"drug", "dose"},
        {{sql::Scalar{std::string{"Amoxicillin"}}, sql::Scalar{std::string{"500mg"}}}}};
    auto chain = reg.find_coercion(v.tag, TypeTag::make(BaseType::Text));
    REQUIRE(chain.has_value());
    auto out = reg.apply(*chain, v);
    CHECK(std::get<TextDoc>(out.payload).text ==
          "[drug: Amoxicillin], [dose: 500mg]\n");
}
