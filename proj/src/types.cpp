#include "xtp/types.hpp"

namespace xtp {

const char* to_string(BaseType b) {
    switch (b) {
        case BaseType::Unstructured: return "Unstructured";
        case BaseType::Text: return "Text";
        case BaseType::Image: return "Image";
        case BaseType::Structured: return "Structured";
        case BaseType::Table: return "Table";
        case BaseType::Graph: return "Graph";
        case BaseType::Report: return "Report";
        case BaseType::DiagramSource: return "DiagramSource";
    }
    return "?";
}

std::optional<BaseType> base_from_string(const std::string& s) {
    static const std::pair<const char*, BaseType> table[] = {
        {"Unstructured", BaseType::Unstructured},
        {"Text", BaseType::Text},
        {"Image", BaseType::Image},
        {"Structured", BaseType::Structured},
        {"Table", BaseType::Table},
        {"Graph", BaseType::Graph},
        {"Report", BaseType::Report},
        {"DiagramSource", BaseType::DiagramSource},
    };
    for (const auto& [name, value] : table) {
        if (s == name) return value;
    }
    return std::nullopt;
}

bool base_refinable(BaseType b) {
    switch (b) {
        case BaseType::Table:
        case BaseType::Graph:
        case BaseType::Report:
        case BaseType::DiagramSource:
        case BaseType::Text:
            return true;
        default:
            return false;
    }
}

std::string TypeTag::str() const {
    std::string s = to_string(base);
    if (refinement) {
        s += '<';
        s += *refinement;
        s += '>';
    }
    return s;
}

TypeTag TypeTag::make(BaseType b, std::string refinement) {
    if (!base_refinable(b)) {
        throw std::invalid_argument(std::string("type ") + to_string(b) +
                                    " does not accept a refinement");
    }
    if (refinement.empty()) {
        throw std::invalid_argument("empty refinement");
    }
    return TypeTag{b, std::move(refinement)};
}

TypeTag TypeTag::parse(const std::string& s) {
    auto lt = s.find('<');
    if (lt == std::string::npos) {
        auto base = base_from_string(s);
        if (!base) throw std::invalid_argument("unknown type: " + s);
        return TypeTag{*base, std::nullopt};
    }
    if (s.back() != '>') {
        throw std::invalid_argument("malformed type tag: " + s);
    }
    auto base = base_from_string(s.substr(0, lt));
    if (!base) throw std::invalid_argument("unknown type: " + s);
    std::string refinement = s.substr(lt + 1, s.size() - lt - 2);
    return make(*base, std::move(refinement));
}

bool well_formed(const TypeTag& t) {
    return !t.refinement || (base_refinable(t.base) && !t.refinement->empty());
}

bool is_subtype(const TypeTag& a, const TypeTag& b) {
    if (a == b) return true;
    if (a.base == b.base && !b.refined()) return true;
    if ((a.base == BaseType::Text || a.base == BaseType::Image) &&
        b.base == BaseType::Unstructured && !b.refined()) {
        return true;
    }
    if ((a.base == BaseType::Table || a.base == BaseType::Graph) &&
        b.base == BaseType::Structured && !b.refined()) {
        return true;
    }
    return false;
}

}  // namespace xtp
