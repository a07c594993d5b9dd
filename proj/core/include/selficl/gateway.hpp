#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace selficl {

struct CompletionRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::vector<std::string> stop;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    // true when counts are whitespace token estimates rather than numbers
    // reported by the backend
    bool approximate = false;
};

struct Completion {
    std::string text;
    Usage usage;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual Completion complete(const CompletionRequest& req) = 0;
};

// Deterministic stand-in model, good enough to drive the whole pipeline
// offline. Rules, first match wins:
//   1. canned completion for the exact prompt (or its sha256)
//   2. instance generation requests get numbered variants of the example
//   3. reasoning prompts get a short chain naming the first option
//   4. direct prompts get the first option letter
//   5. the configured fallback text
class MockBackend : public Backend {
public:
    explicit MockBackend(std::string fallback_text = "(A)");
    std::string id() const override { return "mock"; }
    Completion complete(const CompletionRequest& req) override;

    void add_fixture(const std::string& prompt_or_sha256, const std::string& completion);
    void load_fixtures(const std::string& json_path);
    std::size_t calls() const { return calls_.load(); }

private:
    std::string fallback_text_;
    std::map<std::string, std::string> fixtures_;  // keyed by sha256 of the prompt
    std::atomic<std::size_t> calls_{0};
};

struct HttpBackendConfig {
    std::string endpoint;  // e.g. https://api.example.com/v1/completions
    std::string api_key_env = "SELFICL_API_KEY";
    int max_retries = 3;
    int timeout_ms = 30000;
    int backoff_base_ms = 250;
};

// Talks to an OpenAI style completions endpoint. Transport errors, 429 and
// 5xx responses are retried with exponential backoff; anything else fails
// fast with BackendUnavailable, unparseable bodies with MalformedResponse.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    std::string id() const override;
    Completion complete(const CompletionRequest& req) override;

private:
    HttpBackendConfig config_;
    std::string api_key_;
};

struct CacheStats {
    std::size_t records = 0;
    std::size_t corrupt_skipped = 0;
};

// Append-only JSONL store keyed by a digest of backend id + full request.
// Loading verifies every record's key; lines that do not parse or do not
// verify are skipped with a warning. Later records win over earlier ones.
class CacheStore {
public:
    explicit CacheStore(std::string path);

    static std::string key_for(const std::string& backend_id, const CompletionRequest& req);

    std::optional<Completion> get(const std::string& key) const;
    void put(const std::string& key, const std::string& backend_id,
             const CompletionRequest& req, const Completion& completion);
    void purge();
    CacheStats stats() const;

private:
    std::string path_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Completion> entries_;
    std::size_t corrupt_skipped_ = 0;
};

struct UsageTotals {
    std::size_t calls = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool approximate = false;  // true when any contribution was an estimate
};

class UsageLedger {
public:
    void add(const std::string& label, const Usage& usage);
    void add_totals(const std::string& label, const UsageTotals& totals);
    const std::map<std::string, UsageTotals>& by_label() const { return by_label_; }
    UsageTotals overall() const;

private:
    std::map<std::string, UsageTotals> by_label_;
};

struct Pricing {
    double input_per_1k = 0.0;   // USD per 1000 prompt tokens
    double output_per_1k = 0.0;  // USD per 1000 completion tokens
};

struct CostLine {
    std::string label;
    std::size_t calls = 0;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool approximate = false;
    double cost = 0.0;
};

struct CostReport {
    std::vector<CostLine> lines;  // label order
    double total = 0.0;
};

CostReport estimate_cost(const UsageLedger& ledger, const Pricing& pricing);

enum class CacheUse {
    prefer,   // serve from cache when possible
    refresh,  // skip the cached entry and overwrite it
};

// Front door for all completions: counts traffic, consults the cache and
// keeps the usage ledger. Cache hits replay their stored usage so summaries
// come out identical with or without a warm cache.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<CacheStore> cache = nullptr,
            Pricing pricing = {});

    Completion complete(const CompletionRequest& req, const std::string& usage_label);
    Completion cached_complete(const CompletionRequest& req, const std::string& usage_label,
                               CacheUse use = CacheUse::prefer);

    std::size_t issued() const { return issued_.load(); }
    std::size_t backend_calls() const { return backend_calls_.load(); }
    std::size_t cache_hits() const { return cache_hits_.load(); }

    UsageLedger ledger_snapshot() const;
    CostReport cost_report() const;
    const Pricing& pricing() const { return pricing_; }
    Backend& backend() { return *backend_; }
    std::shared_ptr<CacheStore> cache() const { return cache_; }

private:
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<CacheStore> cache_;
    Pricing pricing_;
    std::atomic<std::size_t> issued_{0};
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
    mutable std::mutex ledger_mutex_;
    UsageLedger ledger_;
};

}  // namespace selficl
