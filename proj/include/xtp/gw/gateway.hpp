#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "xtp/gw/request.hpp"

namespace xtp::gw {

enum class GatewayMode { Live, Fixture, Record };

GatewayMode mode_from_string(const std::string& s);
const char* to_string(GatewayMode m);

struct GatewayError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FixtureMiss : GatewayError {
    FixtureMiss(std::string digest, std::string summary);
    std::string digest;
};

// Raw HTTP hop, injectable so tests can prove fixture mode never touches the
// network.
class Transport {
public:
    struct Result {
        int status = 0;
        std::string body;
    };
    virtual ~Transport() = default;
    virtual Result post(const std::string& url, const std::string& body,
                        const std::string& auth_header_value) = 0;
};

std::unique_ptr<Transport> make_http_transport();

// A Transport that throws on any use; the default for fixture mode.
std::unique_ptr<Transport> make_aborting_transport();

struct GatewayConfig {
    GatewayMode mode = GatewayMode::Fixture;
    std::string fixtures_dir = "fixtures/gateway";
    std::string endpoint;             // live/record modes
    std::string credential_env;       // name of the env var holding the key
    int max_in_flight = 4;
    int max_5xx_retries = 2;          // exponential backoff, base 250 ms
    double backoff_base_ms = 250.0;
};

// Uniform entry point for neural-operator calls. Fixture mode looks
// responses up by canonical request digest; record mode performs the live
// call and then persists it under the same digest.
class Gateway {
public:
    Gateway(GatewayConfig config, std::unique_ptr<Transport> transport = nullptr);

    ModelResponse send(const ModelRequest& req);

    const GatewayConfig& config() const { return config_; }

private:
    ModelResponse send_live(const ModelRequest& req);
    std::optional<ModelResponse> load_fixture(const std::string& digest) const;
    void store_fixture(const std::string& digest, const ModelRequest& req,
                       const ModelResponse& resp);
    std::string fixture_path(const std::string& digest) const;

    GatewayConfig config_;
    std::unique_ptr<Transport> transport_;
    std::mutex record_mutex_;
    std::unique_ptr<class Semaphore> slots_;
};

}  // namespace xtp::gw
