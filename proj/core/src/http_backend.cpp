#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "selficl/errors.hpp"
#include "selficl/gateway.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

using nlohmann::json;

struct SplitUrl {
    std::string base;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& endpoint) {
    std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError("endpoint '" + endpoint + "' needs a scheme, e.g. http:// or https://");
    }
    std::size_t slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

Completion parse_response(const std::string& body, const CompletionRequest& req) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponse(std::string("response body is not JSON: ") + e.what());
    }
    Completion completion;
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()
        && j["choices"][0].contains("text") && j["choices"][0]["text"].is_string()) {
        completion.text = j["choices"][0]["text"].get<std::string>();
    } else if (j.contains("text") && j["text"].is_string()) {
        completion.text = j["text"].get<std::string>();
    } else {
        throw MalformedResponse("response has neither choices[0].text nor text");
    }
    if (j.contains("usage") && j["usage"].is_object()
        && j["usage"].contains("prompt_tokens") && j["usage"].contains("completion_tokens")) {
        completion.usage.prompt_tokens = j["usage"]["prompt_tokens"].get<std::size_t>();
        completion.usage.completion_tokens = j["usage"]["completion_tokens"].get<std::size_t>();
        completion.usage.approximate = false;
    } else {
        completion.usage.prompt_tokens = approx_token_count(req.prompt);
        completion.usage.completion_tokens = approx_token_count(completion.text);
        completion.usage.approximate = true;
    }
    return completion;
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("http backend needs an endpoint");
    split_url(config_.endpoint);  // validate early
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
}

std::string HttpBackend::id() const {
    return "http:" + config_.endpoint;
}

Completion HttpBackend::complete(const CompletionRequest& req) {
    const SplitUrl url = split_url(config_.endpoint);

    json body;
    body["model"] = req.model;
    body["prompt"] = req.prompt;
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (!req.stop.empty()) body["stop"] = req.stop;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_error;
    const int attempts = config_.max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            const auto delay = std::chrono::milliseconds(
                static_cast<long long>(config_.backoff_base_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(url.base);
        client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
        client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
        client.set_write_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

        httplib::Result res = client.Post(url.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            std::string snippet = res->body.substr(0, 200);
            throw BackendUnavailable("HTTP " + std::to_string(res->status) + " from "
                                     + config_.endpoint + ": " + snippet);
        }
        return parse_response(res->body, req);
    }
    throw BackendUnavailable("giving up on " + config_.endpoint + " after "
                             + std::to_string(attempts) + " attempts (" + last_error + ")");
}

}  // namespace selficl
