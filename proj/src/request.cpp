#include "xtp/gw/request.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace xtp::gw {

std::string canonicalize(const ModelRequest& req) {
    auto enc = [](const std::string& s) { return nlohmann::json(s).dump(); };
    std::string out = "{";
    out += "\"max_tokens\":" + std::to_string(req.max_tokens) + ",";
    out += "\"messages\":[";
    for (std::size_t i = 0; i < req.parts.size(); ++i) {
        if (i) out += ",";
        out += "{\"content\":" + enc(req.parts[i].content) +
               ",\"role\":" + enc(req.parts[i].role) + "}";
    }
    out += "],";
    out += "\"model\":" + enc(req.model_id) + ",";
    char temp[32];
    std::snprintf(temp, sizeof temp, "%.2f", req.temperature);
    out += std::string("\"temperature\":") + temp;
    out += "}\n";
    return out;
}

ModelRequest parse_canonical(const std::string& bytes) {
    nlohmann::json j = nlohmann::json::parse(bytes);
    ModelRequest req;
    req.model_id = j.at("model").get<std::string>();
    req.max_tokens = j.at("max_tokens").get<std::int64_t>();
    req.temperature = j.at("temperature").get<double>();
    for (const auto& jm : j.at("messages")) {
        req.parts.push_back({jm.at("role").get<std::string>(),
                             jm.at("content").get<std::string>()});
    }
    return req;
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string fixture_key(const ModelRequest& req) {
    return sha256_hex(canonicalize(req));
}

}  // namespace xtp::gw
