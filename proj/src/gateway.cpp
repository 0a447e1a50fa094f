#include "xtp/gw/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

// cpp-httplib is only reached through make_http_transport(); fixture-mode
// gateways never construct a client.
#include <httplib.h>

namespace xtp::gw {

GatewayMode mode_from_string(const std::string& s) {
    if (s == "live") return GatewayMode::Live;
    if (s == "fixture") return GatewayMode::Fixture;
    if (s == "record") return GatewayMode::Record;
    throw GatewayError("unknown gateway mode: " + s);
}

const char* to_string(GatewayMode m) {
    switch (m) {
        case GatewayMode::Live: return "live";
        case GatewayMode::Fixture: return "fixture";
        case GatewayMode::Record: return "record";
    }
    return "?";
}

FixtureMiss::FixtureMiss(std::string digest_, std::string summary)
    : GatewayError("fixture miss for digest " + digest_ + " (" + summary + ")"),
      digest(std::move(digest_)) {}

namespace {

class HttpTransport : public Transport {
public:
    Result post(const std::string& url, const std::string& body,
                const std::string& auth_header_value) override {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) {
            throw GatewayError("malformed endpoint URL: " + url);
        }
        auto path_start = url.find('/', scheme_end + 3);
        std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

        httplib::Client client(base);
        client.set_read_timeout(120, 0);
        httplib::Headers headers;
        if (!auth_header_value.empty()) {
            headers.emplace("Authorization", auth_header_value);
        }
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            throw GatewayError("transport failure contacting " + url + ": " +
                               httplib::to_string(res.error()));
        }
        return {res->status, res->body};
    }
};

class AbortingTransport : public Transport {
public:
    Result post(const std::string&, const std::string&, const std::string&) override {
        throw GatewayError("network transport invoked in offline mode");
    }
};

std::string summarize(const ModelRequest& req) {
    std::string first = req.parts.empty() ? "" : req.parts.front().content;
    if (first.size() > 80) first = first.substr(0, 77) + "...";
    for (auto& c : first) {
        if (c == '\n') c = ' ';
    }
    return "model=" + req.model_id + " prompt=\"" + first + "\"";
}

}  // namespace

// Bounds concurrent in-flight live calls.
class Semaphore {
public:
    explicit Semaphore(int n) : count_(n) {}
    void acquire() {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return count_ > 0; });
        --count_;
    }
    void release() {
        {
            std::lock_guard lk(m_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    int count_;
};

std::unique_ptr<Transport> make_http_transport() {
    return std::make_unique<HttpTransport>();
}

std::unique_ptr<Transport> make_aborting_transport() {
    return std::make_unique<AbortingTransport>();
}

Gateway::Gateway(GatewayConfig config, std::unique_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) {
        transport_ = config_.mode == GatewayMode::Fixture
                         ? make_aborting_transport()
                         : make_http_transport();
    }
    slots_ = std::make_unique<Semaphore>(std::max(1, config_.max_in_flight));
}

std::string Gateway::fixture_path(const std::string& digest) const {
    return (std::filesystem::path(config_.fixtures_dir) / (digest + ".json")).string();
}

std::optional<ModelResponse> Gateway::load_fixture(const std::string& digest) const {
    std::ifstream in(fixture_path(digest));
    if (!in) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(in);
    const auto& jr = j.at("response");
    ModelResponse resp;
    resp.content = jr.at("content").get<std::string>();
    resp.tokens_in = jr.at("tokens_in").get<std::int64_t>();
    resp.tokens_out = jr.at("tokens_out").get<std::int64_t>();
    resp.latency_ms = jr.at("latency_ms").get<double>();
    resp.from_fixture = true;
    return resp;
}

void Gateway::store_fixture(const std::string& digest, const ModelRequest& req,
                            const ModelResponse& resp) {
    std::lock_guard lk(record_mutex_);
    std::filesystem::create_directories(config_.fixtures_dir);
    nlohmann::json j = {
        {"request", canonicalize(req)},
        {"response",
         {{"content", resp.content},
          {"tokens_in", resp.tokens_in},
          {"tokens_out", resp.tokens_out},
          {"latency_ms", resp.latency_ms}}}};
    std::ofstream out(fixture_path(digest));
    out << j.dump(2) << "\n";
}

ModelResponse Gateway::send_live(const ModelRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& p : req.parts) {
        messages.push_back({{"role", p.role}, {"content", p.content}});
    }
    nlohmann::json body = {{"model", req.model_id},
                           {"messages", messages},
                           {"temperature", req.temperature},
                           {"max_tokens", req.max_tokens}};

    std::string auth;
    if (!config_.credential_env.empty()) {
        const char* key = std::getenv(config_.credential_env.c_str());
        if (!key) {
            throw GatewayError("credential environment variable not set: " +
                               config_.credential_env);
        }
        auth = std::string("Bearer ") + key;
    }
    if (config_.endpoint.empty()) {
        throw GatewayError("no endpoint configured for live gateway mode");
    }

    slots_->acquire();
    struct Release {
        Semaphore* s;
        ~Release() { s->release(); }
    } release{slots_.get()};

    std::string text = body.dump();
    Transport::Result res;
    auto start = std::chrono::steady_clock::now();
    for (int attempt = 0;; ++attempt) {
        res = transport_->post(config_.endpoint, text, auth);
        if (res.status >= 500 && attempt < config_.max_5xx_retries) {
            auto delay = config_.backoff_base_ms * static_cast<double>(1 << attempt);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<std::int64_t>(delay)));
            continue;
        }
        break;
    }
    auto elapsed = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    if (res.status < 200 || res.status >= 300) {
        throw GatewayError("model endpoint returned status " +
                           std::to_string(res.status) + ": " + res.body);
    }
    nlohmann::json j = nlohmann::json::parse(res.body);
    ModelResponse resp;
    resp.content = j.at("content").get<std::string>();
    resp.tokens_in = j.at("usage").at("input_tokens").get<std::int64_t>();
    resp.tokens_out = j.at("usage").at("output_tokens").get<std::int64_t>();
    resp.latency_ms = elapsed;
    resp.from_fixture = false;
    return resp;
}

ModelResponse Gateway::send(const ModelRequest& req) {
    const std::string digest = fixture_key(req);
    switch (config_.mode) {
        case GatewayMode::Fixture: {
            auto resp = load_fixture(digest);
            if (!resp) throw FixtureMiss(digest, summarize(req));
            return *resp;
        }
        case GatewayMode::Live:
            return send_live(req);
        case GatewayMode::Record: {
            ModelResponse resp = send_live(req);
            store_fixture(digest, req, resp);
            return resp;
        }
    }
    throw GatewayError("unreachable gateway mode");
}

}  // namespace xtp::gw
