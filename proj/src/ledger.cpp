#include "xtp/flow/ledger.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace xtp::flow {

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Ok: return "ok";
        case Outcome::Rerouted: return "rerouted";
        case Outcome::Error: return "error";
    }
    return "?";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "ok") return Outcome::Ok;
    if (s == "rerouted") return Outcome::Rerouted;
    if (s == "error") return Outcome::Error;
    throw std::invalid_argument("unknown outcome: " + s);
}

std::string fold_case(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

void DeletedValueRegistry::add(const std::string& value, std::int64_t invocation_id) {
    entries_.emplace(fold_case(value), invocation_id);
}

std::vector<Violation> guard_projection(const std::string& candidate,
                                        const DeletedValueRegistry& registry) {
    std::vector<Violation> violations;
    if (registry.empty() || candidate.empty()) return violations;
    const std::string folded = fold_case(candidate);
    for (const auto& [value, _] : registry.entries()) {
        if (value.empty()) continue;
        std::size_t pos = 0;
        while ((pos = folded.find(value, pos)) != std::string::npos) {
            violations.push_back({value, pos, pos + value.size()});
            ++pos;  // overlapping occurrences still count
        }
    }
    std::sort(violations.begin(), violations.end(),
              [](const Violation& a, const Violation& b) {
                  return std::tie(a.start, a.end, a.value) <
                         std::tie(b.start, b.end, b.value);
              });
    return violations;
}

std::int64_t ProvenanceLedger::append(TraceEvent event) {
    event.invocation_id = next_id_++;
    events_.push_back(event);
    return event.invocation_id;
}

void ProvenanceLedger::copy_event(const TraceEvent& event) {
    events_.push_back(event);
    next_id_ = std::max(next_id_, event.invocation_id + 1);
}

void ProvenanceLedger::record_value(const std::string& value_id, const TypedValue& v) {
    values_[value_id] = v;
}

const TypedValue* ProvenanceLedger::find_value(const std::string& id) const {
    auto it = values_.find(id);
    return it == values_.end() ? nullptr : &it->second;
}

const TraceEvent* ProvenanceLedger::last_event_of(const std::string& node_id) const {
    const TraceEvent* found = nullptr;
    for (const auto& e : events_) {
        if (e.node_id == node_id) found = &e;
    }
    return found;
}

void ProvenanceLedger::add_element_origin(const std::string& element_id,
                                          SourceSpan span,
                                          std::int64_t invocation_id) {
    origin_log_.push_back({element_id, std::move(span), invocation_id});
}

void ProvenanceLedger::annotate(std::int64_t invocation_id, nlohmann::json data) {
    annotations_[invocation_id] = std::move(data);
}

void ProvenanceLedger::add_deleted_value(const std::string& value,
                                         std::int64_t invocation_id) {
    deleted_.add(value, invocation_id);
}

std::map<std::string, std::vector<SourceSpan>> ProvenanceLedger::element_origins()
    const {
    std::map<std::string, std::vector<SourceSpan>> out;
    for (const auto& rec : origin_log_) {
        auto& spans = out[rec.element_id];
        if (std::find(spans.begin(), spans.end(), rec.span) == spans.end()) {
            spans.push_back(rec.span);
        }
    }
    return out;
}

std::int64_t ProvenanceLedger::contribution_bound(
    const std::vector<SourceSpan>& entity_spans) const {
    return static_cast<std::int64_t>(contributing_elements(entity_spans).size());
}

std::vector<std::string> ProvenanceLedger::contributing_elements(
    const std::vector<SourceSpan>& entity_spans) const {
    std::vector<std::string> out;
    for (const auto& [id, spans] : element_origins()) {
        bool hit = false;
        for (const auto& s : spans) {
            for (const auto& e : entity_spans) {
                if (s.overlaps(e)) { hit = true; break; }
            }
            if (hit) break;
        }
        if (hit) out.push_back(id);
    }
    return out;
}

nlohmann::json event_to_json(const TraceEvent& e) {
    return {{"kind", "event"},
            {"invocation_id", e.invocation_id},
            {"node_id", e.node_id},
            {"impl_id", e.impl_id},
            {"input_ids", e.input_ids},
            {"output_ids", e.output_ids},
            {"tokens_in", e.tokens_in},
            {"tokens_out", e.tokens_out},
            {"latency_ms", e.latency_ms},
            {"confidence", e.confidence},
            {"outcome", to_string(e.outcome)}};
}

TraceEvent event_from_json(const nlohmann::json& j) {
    TraceEvent e;
    e.invocation_id = j.at("invocation_id").get<std::int64_t>();
    e.node_id = j.at("node_id").get<std::string>();
    e.impl_id = j.at("impl_id").get<std::string>();
    e.input_ids = j.at("input_ids").get<std::vector<std::string>>();
    e.output_ids = j.at("output_ids").get<std::vector<std::string>>();
    e.tokens_in = j.at("tokens_in").get<std::int64_t>();
    e.tokens_out = j.at("tokens_out").get<std::int64_t>();
    e.latency_ms = j.at("latency_ms").get<double>();
    e.confidence = j.at("confidence").get<double>();
    e.outcome = outcome_from_string(j.at("outcome").get<std::string>());
    return e;
}

std::string ProvenanceLedger::to_jsonl(const nlohmann::json& header) const {
    std::ostringstream out;
    nlohmann::json h = header;
    h["kind"] = "run";
    out << h.dump() << "\n";
    for (const auto& [id, v] : values_) {
        nlohmann::json jv = value_to_json(v);
        jv["kind"] = "value";
        jv["id"] = id;
        out << jv.dump() << "\n";
    }
    for (const auto& e : events_) {
        nlohmann::json je = event_to_json(e);
        auto it = annotations_.find(e.invocation_id);
        out << je.dump() << "\n";
        if (it != annotations_.end()) {
            out << nlohmann::json{{"kind", "annotation"},
                                  {"invocation_id", e.invocation_id},
                                  {"data", it->second}}
                       .dump()
                << "\n";
        }
    }
    for (const auto& rec : origin_log_) {
        out << nlohmann::json{{"kind", "origin"},
                              {"element_id", rec.element_id},
                              {"source_id", rec.span.source_id},
                              {"start", rec.span.start},
                              {"end", rec.span.end},
                              {"invocation_id", rec.invocation_id}}
                   .dump()
            << "\n";
    }
    for (const auto& [value, inv] : deleted_.entries()) {
        out << nlohmann::json{{"kind", "deleted"},
                              {"value", value},
                              {"invocation_id", inv}}
                   .dump()
            << "\n";
    }
    return out.str();
}

ProvenanceLedger ProvenanceLedger::from_jsonl(const std::string& text,
                                              nlohmann::json* header_out) {
    ProvenanceLedger ledger;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string kind = j.value("kind", "event");
        if (kind == "run") {
            if (header_out) *header_out = j;
        } else if (kind == "value") {
            ledger.record_value(j.at("id").get<std::string>(), value_from_json(j));
        } else if (kind == "event") {
            ledger.copy_event(event_from_json(j));
        } else if (kind == "annotation") {
            ledger.annotate(j.at("invocation_id").get<std::int64_t>(), j.at("data"));
        } else if (kind == "origin") {
            ledger.add_element_origin(
                j.at("element_id").get<std::string>(),
                {j.at("source_id").get<std::string>(),
                 j.at("start").get<std::uint64_t>(), j.at("end").get<std::uint64_t>()},
                j.at("invocation_id").get<std::int64_t>());
        } else if (kind == "deleted") {
            ledger.add_deleted_value(j.at("value").get<std::string>(),
                                     j.at("invocation_id").get<std::int64_t>());
        }
    }
    return ledger;
}

}  // namespace xtp::flow
