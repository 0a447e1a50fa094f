#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "xtp/ops/graph.hpp"
#include "xtp/sql/ast.hpp"
#include "xtp/types.hpp"

namespace xtp {

struct TextDoc {
    std::string text;
    bool operator==(const TextDoc&) const = default;
};

enum class SectionKind { Text, ChartData };

struct ReportSection {
    SectionKind kind = SectionKind::Text;
    std::string content;  // prose, or CSV with a header row for chart data
    bool operator==(const ReportSection&) const = default;
};

struct Report {
    std::vector<ReportSection> sections;
    bool operator==(const Report&) const = default;
};

struct DiagramSource {
    std::string format_id = "xtp-netlist/1";
    std::string body;  // property-graph serialization
    bool operator==(const DiagramSource&) const = default;
};

// Escape hatch for intermediate structured data (schemas, triplet lists,
// store snapshots) that flows between operators but is not itself a final
// modality.
struct Opaque {
    std::string type_name;
    nlohmann::json data;
    bool operator==(const Opaque&) const = default;
};

using Payload = std::variant<TextDoc, sql::Relation, ops::PropertyGraph, Report,
                             DiagramSource, Opaque>;

// Byte range [start, end) into the canonical UTF-8 text of a source document.
struct SourceSpan {
    std::string source_id;
    std::uint64_t start = 0;
    std::uint64_t end = 0;
    auto operator<=>(const SourceSpan&) const = default;

    bool overlaps(const SourceSpan& other) const {
        return source_id == other.source_id && start < other.end &&
               other.start < end;
    }
};

struct ProvenanceRef {
    std::vector<SourceSpan> origins;        // kept sorted and deduplicated
    std::vector<std::int64_t> invocations;  // producing op-invocation chain
    bool operator==(const ProvenanceRef&) const = default;

    void add_origin(SourceSpan span);
};

struct TypedValue {
    TypeTag tag;
    Payload payload;
    ProvenanceRef provenance;
    double confidence = 1.0;  // symbolic operators leave this at 1.0

    bool operator==(const TypedValue&) const = default;
};

// Tag/payload consistency. Image accepts TextDoc or Opaque stand-ins (the
// gateway transports attachments as text at this scale).
bool payload_matches_tag(const TypeTag& tag, const Payload& payload);

const char* payload_kind(const Payload& p);

nlohmann::json payload_to_json(const Payload& p);
Payload payload_from_json(const std::string& kind, const nlohmann::json& j);

nlohmann::json value_to_json(const TypedValue& v);
TypedValue value_from_json(const nlohmann::json& j);

std::string report_to_text(const Report& r);

}  // namespace xtp
