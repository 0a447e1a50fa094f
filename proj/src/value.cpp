#include "xtp/value.hpp"

#include <algorithm>

#include "xtp/sql/store.hpp"

namespace xtp {

void ProvenanceRef::add_origin(SourceSpan span) {
    auto it = std::lower_bound(origins.begin(), origins.end(), span);
    if (it == origins.end() || !(*it == span)) origins.insert(it, std::move(span));
}

bool payload_matches_tag(const TypeTag& tag, const Payload& payload) {
    switch (tag.base) {
        case BaseType::Unstructured:
            return true;
        case BaseType::Text:
            return std::holds_alternative<TextDoc>(payload);
        case BaseType::Image:
            return std::holds_alternative<TextDoc>(payload) ||
                   std::holds_alternative<Opaque>(payload);
        case BaseType::Structured:
            return std::holds_alternative<sql::Relation>(payload) ||
                   std::holds_alternative<ops::PropertyGraph>(payload) ||
                   std::holds_alternative<Opaque>(payload);
        case BaseType::Table:
            return std::holds_alternative<sql::Relation>(payload);
        case BaseType::Graph:
            return std::holds_alternative<ops::PropertyGraph>(payload);
        case BaseType::Report:
            return std::holds_alternative<Report>(payload);
        case BaseType::DiagramSource:
            return std::holds_alternative<DiagramSource>(payload);
    }
    return false;
}

const char* payload_kind(const Payload& p) {
    struct Visitor {
        const char* operator()(const TextDoc&) const { return "text_doc"; }
        const char* operator()(const sql::Relation&) const { return "relation"; }
        const char* operator()(const ops::PropertyGraph&) const { return "property_graph"; }
        const char* operator()(const Report&) const { return "report"; }
        const char* operator()(const DiagramSource&) const { return "diagram_source"; }
        const char* operator()(const Opaque&) const { return "opaque"; }
    };
    return std::visit(Visitor{}, p);
}

nlohmann::json payload_to_json(const Payload& p) {
    struct Visitor {
        nlohmann::json operator()(const TextDoc& t) const {
            return {{"text", t.text}};
        }
        nlohmann::json operator()(const sql::Relation& r) const {
            return sql::relation_to_json(r);
        }
        nlohmann::json operator()(const ops::PropertyGraph& g) const {
            return g.to_json();
        }
        nlohmann::json operator()(const Report& r) const {
            nlohmann::json sections = nlohmann::json::array();
            for (const auto& s : r.sections) {
                sections.push_back(
                    {{"kind", s.kind == SectionKind::Text ? "text" : "chart_data"},
                     {"content", s.content}});
            }
            return {{"sections", sections}};
        }
        nlohmann::json operator()(const DiagramSource& d) const {
            return {{"format_id", d.format_id}, {"body", d.body}};
        }
        nlohmann::json operator()(const Opaque& o) const {
            return {{"type_name", o.type_name}, {"data", o.data}};
        }
    };
    return std::visit(Visitor{}, p);
}

Payload payload_from_json(const std::string& kind, const nlohmann::json& j) {
    if (kind == "text_doc") return TextDoc{j.at("text").get<std::string>()};
    if (kind == "relation") return sql::relation_from_json(j);
    if (kind == "property_graph") return ops::PropertyGraph::from_json(j);
    if (kind == "report") {
        Report r;
        for (const auto& js : j.at("sections")) {
            ReportSection s;
            s.kind = js.at("kind") == "text" ? SectionKind::Text : SectionKind::ChartData;
            s.content = js.at("content").get<std::string>();
            r.sections.push_back(std::move(s));
        }
        return r;
    }
    if (kind == "diagram_source") {
        return DiagramSource{j.at("format_id").get<std::string>(),
                             j.at("body").get<std::string>()};
    }
    if (kind == "opaque") {
        return Opaque{j.at("type_name").get<std::string>(), j.at("data")};
    }
    throw std::invalid_argument("unknown payload kind: " + kind);
}

nlohmann::json value_to_json(const TypedValue& v) {
    nlohmann::json origins = nlohmann::json::array();
    for (const auto& o : v.provenance.origins) {
        origins.push_back({o.source_id, o.start, o.end});
    }
    return {{"tag", v.tag.str()},
            {"kind", payload_kind(v.payload)},
            {"payload", payload_to_json(v.payload)},
            {"confidence", v.confidence},
            {"origins", origins},
            {"invocations", v.provenance.invocations}};
}

TypedValue value_from_json(const nlohmann::json& j) {
    TypedValue v;
    v.tag = TypeTag::parse(j.at("tag").get<std::string>());
    v.payload = payload_from_json(j.at("kind").get<std::string>(), j.at("payload"));
    v.confidence = j.value("confidence", 1.0);
    if (j.contains("origins")) {
        for (const auto& jo : j["origins"]) {
            v.provenance.add_origin({jo.at(0).get<std::string>(),
                                     jo.at(1).get<std::uint64_t>(),
                                     jo.at(2).get<std::uint64_t>()});
        }
    }
    if (j.contains("invocations")) {
        v.provenance.invocations = j["invocations"].get<std::vector<std::int64_t>>();
    }
    return v;
}

std::string report_to_text(const Report& r) {
    std::string out;
    for (const auto& s : r.sections) {
        if (!out.empty()) out += "\n";
        out += s.content;
        if (out.empty() || out.back() != '\n') out += "\n";
    }
    return out;
}

}  // namespace xtp
