#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xtp/value.hpp"

namespace xtp::flow {

enum class Outcome { Ok, Rerouted, Error };

const char* to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);

struct TraceEvent {
    std::int64_t invocation_id = 0;
    std::string node_id;
    std::string impl_id;
    std::vector<std::string> input_ids;
    std::vector<std::string> output_ids;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    double latency_ms = 0.0;
    double confidence = 1.0;
    Outcome outcome = Outcome::Ok;
};

// Case-folded deleted-value set; grows monotonically during a run.
class DeletedValueRegistry {
public:
    void add(const std::string& value, std::int64_t invocation_id);
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, std::int64_t>& entries() const { return entries_; }

private:
    std::map<std::string, std::int64_t> entries_;  // folded value -> deleting invocation
};

struct Violation {
    std::string value;        // registered (folded) value that resurfaced
    std::uint64_t start = 0;  // byte offsets into the candidate text
    std::uint64_t end = 0;
    bool operator==(const Violation&) const = default;
};

// Case-folded substring scan; reports every occurrence of every registered
// value. Empty result means the candidate is clean.
std::vector<Violation> guard_projection(const std::string& candidate,
                                        const DeletedValueRegistry& registry);

std::string fold_case(const std::string& s);

// Append-only record of operator invocations plus the source-span origins of
// every structured element. Invocation ids are strictly increasing and
// assigned by the ledger; a single consumer appends, so event order is total.
class ProvenanceLedger {
public:
    struct OriginRecord {
        std::string element_id;
        SourceSpan span;
        std::int64_t invocation_id = 0;
    };

    std::int64_t next_invocation_id() const { return next_id_; }

    // Assigns the next invocation id.
    std::int64_t append(TraceEvent event);
    // Replay keeps upstream events under their original ids.
    void copy_event(const TraceEvent& event);

    void record_value(const std::string& value_id, const TypedValue& v);
    void add_element_origin(const std::string& element_id, SourceSpan span,
                            std::int64_t invocation_id);
    void annotate(std::int64_t invocation_id, nlohmann::json data);
    void add_deleted_value(const std::string& value, std::int64_t invocation_id);

    const std::vector<TraceEvent>& events() const { return events_; }
    const std::vector<OriginRecord>& origin_log() const { return origin_log_; }
    const std::map<std::string, TypedValue>& values() const { return values_; }
    const std::map<std::int64_t, nlohmann::json>& annotations() const {
        return annotations_;
    }
    const TypedValue* find_value(const std::string& id) const;
    const TraceEvent* last_event_of(const std::string& node_id) const;

    // element id -> deduplicated origin set, derived from the log.
    std::map<std::string, std::vector<SourceSpan>> element_origins() const;

    // Number of distinct structured elements whose origin set overlaps any of
    // the entity spans.
    std::int64_t contribution_bound(const std::vector<SourceSpan>& entity_spans) const;
    std::vector<std::string> contributing_elements(
        const std::vector<SourceSpan>& entity_spans) const;

    DeletedValueRegistry& deleted_values() { return deleted_; }
    const DeletedValueRegistry& deleted_values() const { return deleted_; }

    // One JSON object per line: a run header, then value / event / origin /
    // annotation / deleted records.
    std::string to_jsonl(const nlohmann::json& header) const;
    static ProvenanceLedger from_jsonl(const std::string& text,
                                       nlohmann::json* header_out);

private:
    std::int64_t next_id_ = 1;
    std::vector<TraceEvent> events_;
    std::map<std::string, TypedValue> values_;
    std::vector<OriginRecord> origin_log_;
    std::map<std::int64_t, nlohmann::json> annotations_;
    DeletedValueRegistry deleted_;
};

nlohmann::json event_to_json(const TraceEvent& e);
TraceEvent event_from_json(const nlohmann::json& j);

}  // namespace xtp::flow
