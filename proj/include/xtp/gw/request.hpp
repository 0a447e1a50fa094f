#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xtp::gw {

struct MessagePart {
    std::string role;     // "system" | "user" | ...
    std::string content;  // text, or a textual attachment stand-in
    bool operator==(const MessagePart&) const = default;
};

struct ModelRequest {
    std::string model_id;
    std::vector<MessagePart> parts;
    double temperature = 0.0;
    std::int64_t max_tokens = 1024;
    bool operator==(const ModelRequest&) const = default;
};

struct ModelResponse {
    std::string content;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    double latency_ms = 0.0;
    bool from_fixture = false;
};

// Deterministic single-line JSON rendering with sorted field names, UTF-8,
// LF terminated; temperature printed with exactly two decimals. Stable under
// parse_canonical + canonicalize.
std::string canonicalize(const ModelRequest& req);
ModelRequest parse_canonical(const std::string& bytes);

// 64 hex chars, SHA-256 of the canonical form.
std::string fixture_key(const ModelRequest& req);

std::string sha256_hex(const std::string& bytes);

}  // namespace xtp::gw
