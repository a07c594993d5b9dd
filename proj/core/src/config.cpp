#include "selficl/config.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "selficl/errors.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        if (!known.count(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void read_into(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value for '") + key + "' in " + where);
    }
}

BackendConfig backend_from_json(const json& obj) {
    BackendConfig b;
    reject_unknown_keys(obj,
                        {"kind", "model", "fixtures", "fallback", "endpoint", "api_key_env",
                         "max_retries", "timeout_ms", "backoff_base_ms", "temperature",
                         "max_tokens", "pricing"},
                        "backend");
    read_into(obj, "kind", b.kind, "backend");
    read_into(obj, "model", b.model, "backend");
    read_into(obj, "fixtures", b.fixtures, "backend");
    read_into(obj, "fallback", b.fallback, "backend");
    read_into(obj, "endpoint", b.endpoint, "backend");
    read_into(obj, "api_key_env", b.api_key_env, "backend");
    read_into(obj, "max_retries", b.max_retries, "backend");
    read_into(obj, "timeout_ms", b.timeout_ms, "backend");
    read_into(obj, "backoff_base_ms", b.backoff_base_ms, "backend");
    read_into(obj, "temperature", b.temperature, "backend");
    read_into(obj, "max_tokens", b.max_tokens, "backend");
    if (obj.contains("pricing")) {
        const json& p = obj.at("pricing");
        if (!p.is_object()) throw ConfigError("backend.pricing must be an object");
        reject_unknown_keys(p, {"input_per_1k", "output_per_1k"}, "backend.pricing");
        read_into(p, "input_per_1k", b.pricing.input_per_1k, "backend.pricing");
        read_into(p, "output_per_1k", b.pricing.output_per_1k, "backend.pricing");
    }
    if (b.kind != "mock" && b.kind != "http") {
        throw ConfigError("backend.kind must be mock or http, got '" + b.kind + "'");
    }
    if (b.kind == "http" && b.endpoint.empty()) {
        throw ConfigError("backend.kind http needs backend.endpoint");
    }
    if (b.max_retries < 0) throw ConfigError("backend.max_retries cannot be negative");
    if (b.max_tokens <= 0) throw ConfigError("backend.max_tokens must be positive");
    return b;
}

AnalysisConfig analysis_from_json(const json& obj) {
    AnalysisConfig a;
    reject_unknown_keys(obj, {"provider", "dimension", "seeds", "endpoint", "model", "api_key_env"},
                        "analysis");
    read_into(obj, "provider", a.provider, "analysis");
    read_into(obj, "dimension", a.dimension, "analysis");
    read_into(obj, "seeds", a.seeds, "analysis");
    read_into(obj, "endpoint", a.endpoint, "analysis");
    read_into(obj, "model", a.model, "analysis");
    read_into(obj, "api_key_env", a.api_key_env, "analysis");
    if (a.provider != "hashed" && a.provider != "http") {
        throw ConfigError("analysis.provider must be hashed or http, got '" + a.provider + "'");
    }
    if (a.provider == "http" && a.endpoint.empty()) {
        throw ConfigError("analysis.provider http needs analysis.endpoint");
    }
    if (a.dimension == 0) throw ConfigError("analysis.dimension must be positive");
    if (a.seeds == 0) throw ConfigError("analysis.seeds must be positive");
    return a;
}

}  // namespace

RunDocument run_document_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown_keys(j,
                        {"manifest", "task", "mode", "shots", "style", "batch_size",
                         "sample_shots", "workers", "out", "cache", "backend", "analysis"},
                        "config");
    RunDocument doc;
    read_into(j, "manifest", doc.manifest, "config");
    read_into(j, "task", doc.task, "config");
    read_into(j, "mode", doc.mode, "config");
    if (j.contains("shots")) {
        const json& s = j.at("shots");
        if (!s.is_object()) throw ConfigError("shots must be an object");
        reject_unknown_keys(s, {"k", "diversity_hints", "random_labels", "seed"}, "shots");
        read_into(s, "k", doc.shots.k, "shots");
        read_into(s, "diversity_hints", doc.shots.diversity_hints, "shots");
        read_into(s, "random_labels", doc.shots.random_labels, "shots");
        read_into(s, "seed", doc.shots.seed, "shots");
    }
    read_into(j, "style", doc.style, "config");
    read_into(j, "batch_size", doc.batch_size, "config");
    if (j.contains("sample_shots") && !j.at("sample_shots").is_null()) {
        std::size_t n = 0;
        read_into(j, "sample_shots", n, "config");
        doc.sample_shots = n;
    }
    read_into(j, "workers", doc.workers, "config");
    read_into(j, "out", doc.out, "config");
    read_into(j, "cache", doc.cache, "config");
    if (j.contains("backend")) {
        if (!j.at("backend").is_object()) throw ConfigError("backend must be an object");
        doc.backend = backend_from_json(j.at("backend"));
    }
    if (j.contains("analysis")) {
        if (!j.at("analysis").is_object()) throw ConfigError("analysis must be an object");
        doc.analysis = analysis_from_json(j.at("analysis"));
    }

    if (doc.manifest.empty()) throw ConfigError("config needs a 'manifest' path");
    mode_from_name(doc.mode);    // validates
    style_from_name(doc.style);  // validates
    if (doc.batch_size == 0) throw ConfigError("batch_size must be positive");
    if (doc.workers == 0) throw ConfigError("workers must be positive");
    if (doc.sample_shots) {
        if (*doc.sample_shots == 0) throw ConfigError("sample_shots must be positive");
        if (*doc.sample_shots > doc.shots.k) {
            throw ConfigError("sample_shots cannot exceed shots.k");
        }
    }
    return doc;
}

RunDocument load_run_document(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error& e) {
        throw ConfigError(std::string(e.what()));
    }
    return run_document_from_json(text);
}

std::string run_document_to_json(const RunDocument& doc) {
    json j;
    j["manifest"] = doc.manifest;
    j["task"] = doc.task;
    j["mode"] = doc.mode;
    j["shots"] = {{"k", doc.shots.k},
                  {"diversity_hints", doc.shots.diversity_hints},
                  {"random_labels", doc.shots.random_labels},
                  {"seed", doc.shots.seed}};
    j["style"] = doc.style;
    j["batch_size"] = doc.batch_size;
    if (doc.sample_shots) {
        j["sample_shots"] = *doc.sample_shots;
    } else {
        j["sample_shots"] = nullptr;
    }
    j["workers"] = doc.workers;
    j["out"] = doc.out;
    j["cache"] = doc.cache;
    j["backend"] = {{"kind", doc.backend.kind},
                    {"model", doc.backend.model},
                    {"fixtures", doc.backend.fixtures},
                    {"fallback", doc.backend.fallback},
                    {"endpoint", doc.backend.endpoint},
                    {"api_key_env", doc.backend.api_key_env},
                    {"max_retries", doc.backend.max_retries},
                    {"timeout_ms", doc.backend.timeout_ms},
                    {"backoff_base_ms", doc.backend.backoff_base_ms},
                    {"temperature", doc.backend.temperature},
                    {"max_tokens", doc.backend.max_tokens},
                    {"pricing", {{"input_per_1k", doc.backend.pricing.input_per_1k},
                                 {"output_per_1k", doc.backend.pricing.output_per_1k}}}};
    j["analysis"] = {{"provider", doc.analysis.provider},
                     {"dimension", doc.analysis.dimension},
                     {"seeds", doc.analysis.seeds},
                     {"endpoint", doc.analysis.endpoint},
                     {"model", doc.analysis.model},
                     {"api_key_env", doc.analysis.api_key_env}};
    return j.dump(2) + "\n";
}

}  // namespace selficl
