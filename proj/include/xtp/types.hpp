#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace xtp {

// Modality lattice. Unstructured sits at the top of the unstructured side,
// Structured above Table/Graph. Report and DiagramSource are projection
// outputs and unrelated to either hierarchy except through refinement.
enum class BaseType {
    Unstructured,
    Text,
    Image,
    Structured,
    Table,
    Graph,
    Report,
    DiagramSource,
};

const char* to_string(BaseType b);
std::optional<BaseType> base_from_string(const std::string& s);

// Only these bases accept a domain refinement tag.
bool base_refinable(BaseType b);

struct TypeTag {
    BaseType base = BaseType::Unstructured;
    std::optional<std::string> refinement;

    bool operator==(const TypeTag&) const = default;

    bool refined() const { return refinement.has_value(); }
    TypeTag widened() const { return TypeTag{base, std::nullopt}; }

    // Renders as `Base` or `Base<Refinement>`.
    std::string str() const;

    static TypeTag make(BaseType b) { return TypeTag{b, std::nullopt}; }
    static TypeTag make(BaseType b, std::string refinement);

    // Parses `Base` / `Base<Refinement>`; throws std::invalid_argument on
    // unknown bases, empty refinements, or refinements on non-refinable bases.
    static TypeTag parse(const std::string& s);
};

bool well_formed(const TypeTag& t);

// Reflexive, antisymmetric, transitive over the finite tag universe.
bool is_subtype(const TypeTag& a, const TypeTag& b);

}  // namespace xtp
