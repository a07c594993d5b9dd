#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "selficl/errors.hpp"
#include "selficl/gateway.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

using nlohmann::json;

constexpr char kFieldSep = '\x1f';
constexpr char kListSep = '\x1e';

json record_json(const std::string& key, const std::string& backend_id,
                 const CompletionRequest& req, const Completion& completion) {
    json j;
    j["key"] = key;
    j["backend"] = backend_id;
    j["model"] = req.model;
    j["prompt"] = req.prompt;
    j["temperature"] = req.temperature;
    j["max_tokens"] = req.max_tokens;
    j["stop"] = req.stop;
    j["text"] = completion.text;
    j["prompt_tokens"] = completion.usage.prompt_tokens;
    j["completion_tokens"] = completion.usage.completion_tokens;
    j["approximate"] = completion.usage.approximate;
    return j;
}

}  // namespace

std::string CacheStore::key_for(const std::string& backend_id, const CompletionRequest& req) {
    char temp[64];
    std::snprintf(temp, sizeof(temp), "%.17g", req.temperature);
    std::string material;
    material.reserve(req.prompt.size() + 128);
    material += backend_id;
    material += kFieldSep;
    material += req.model;
    material += kFieldSep;
    material += req.prompt;
    material += kFieldSep;
    material += temp;
    material += kFieldSep;
    material += std::to_string(req.max_tokens);
    material += kFieldSep;
    for (std::size_t i = 0; i < req.stop.size(); ++i) {
        if (i) material += kListSep;
        material += req.stop[i];
    }
    return sha256_hex(material);
}

CacheStore::CacheStore(std::string path) : path_(std::move(path)) {
    const std::filesystem::path parent = std::filesystem::path(path_).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // nothing cached yet
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            CompletionRequest req;
            req.model = j.at("model").get<std::string>();
            req.prompt = j.at("prompt").get<std::string>();
            req.temperature = j.at("temperature").get<double>();
            req.max_tokens = j.at("max_tokens").get<int>();
            req.stop = j.at("stop").get<std::vector<std::string>>();
            const std::string backend = j.at("backend").get<std::string>();
            const std::string key = j.at("key").get<std::string>();
            if (key_for(backend, req) != key) {
                throw CacheCorrupt("stored key does not match its request");
            }
            Completion completion;
            completion.text = j.at("text").get<std::string>();
            completion.usage.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
            completion.usage.completion_tokens = j.at("completion_tokens").get<std::size_t>();
            completion.usage.approximate = j.at("approximate").get<bool>();
            entries_[key] = std::move(completion);
        } catch (const std::exception& e) {
            ++corrupt_skipped_;
            std::cerr << "warning: " << path_ << ":" << line_no
                      << ": skipping unusable cache record (" << e.what() << ")\n";
        }
    }
}

std::optional<Completion> CacheStore::get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void CacheStore::put(const std::string& key, const std::string& backend_id,
                     const CompletionRequest& req, const Completion& completion) {
    const std::string line = record_json(key, backend_id, req, completion).dump();
    std::unique_lock lock(mutex_);
    entries_[key] = completion;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw OutputUnwritable("cannot append to cache file " + path_);
    out << line << '\n';
    out.flush();
    if (!out) throw OutputUnwritable("short write to cache file " + path_);
}

void CacheStore::purge() {
    std::unique_lock lock(mutex_);
    entries_.clear();
    corrupt_skipped_ = 0;
    atomic_write_file(path_, "");
}

CacheStats CacheStore::stats() const {
    std::shared_lock lock(mutex_);
    return CacheStats{entries_.size(), corrupt_skipped_};
}

}  // namespace selficl
