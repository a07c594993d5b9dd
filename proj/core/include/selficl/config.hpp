#pragma once

#include <optional>
#include <string>

#include "selficl/gateway.hpp"
#include "selficl/pipeline.hpp"

namespace selficl {

struct BackendConfig {
    std::string kind = "mock";  // mock | http
    std::string model = "text-davinci-003";
    std::string fixtures;        // mock: optional canned completions (JSON object)
    std::string fallback = "(A)";  // mock: completion of last resort
    std::string endpoint;        // http: completions URL
    std::string api_key_env = "SELFICL_API_KEY";
    int max_retries = 3;
    int timeout_ms = 30000;
    int backoff_base_ms = 250;
    double temperature = 0.0;
    int max_tokens = 1024;
    Pricing pricing{0.02, 0.02};
};

struct AnalysisConfig {
    std::string provider = "hashed";  // hashed | http
    std::size_t dimension = 384;
    std::size_t seeds = 5;
    std::string endpoint;
    std::string model;
    std::string api_key_env = "SELFICL_API_KEY";
};

// one JSON document describing a whole run; unknown keys are rejected so
// typos fail loudly instead of silently running the default
struct RunDocument {
    std::string manifest;  // task manifest file or directory
    std::string task;      // run only this task; empty means all
    std::string mode = "direct";
    ShotConfig shots;
    std::string style = "streaming";
    std::size_t batch_size = 4;
    std::optional<std::size_t> sample_shots;
    std::size_t workers = 1;
    std::string out = "out";
    std::string cache;  // empty disables caching
    BackendConfig backend;
    AnalysisConfig analysis;
};

RunDocument run_document_from_json(const std::string& text);
RunDocument load_run_document(const std::string& path);
std::string run_document_to_json(const RunDocument& doc);

}  // namespace selficl
