#include "selficl/gateway.hpp"

namespace selficl {

void UsageLedger::add(const std::string& label, const Usage& usage) {
    UsageTotals& t = by_label_[label];
    t.calls += 1;
    t.prompt_tokens += usage.prompt_tokens;
    t.completion_tokens += usage.completion_tokens;
    t.approximate = t.approximate || usage.approximate;
}

void UsageLedger::add_totals(const std::string& label, const UsageTotals& totals) {
    UsageTotals& t = by_label_[label];
    t.calls += totals.calls;
    t.prompt_tokens += totals.prompt_tokens;
    t.completion_tokens += totals.completion_tokens;
    t.approximate = t.approximate || totals.approximate;
}

UsageTotals UsageLedger::overall() const {
    UsageTotals sum;
    for (const auto& [label, t] : by_label_) {
        sum.calls += t.calls;
        sum.prompt_tokens += t.prompt_tokens;
        sum.completion_tokens += t.completion_tokens;
        sum.approximate = sum.approximate || t.approximate;
    }
    return sum;
}

CostReport estimate_cost(const UsageLedger& ledger, const Pricing& pricing) {
    CostReport report;
    for (const auto& [label, t] : ledger.by_label()) {
        CostLine line;
        line.label = label;
        line.calls = t.calls;
        line.prompt_tokens = t.prompt_tokens;
        line.completion_tokens = t.completion_tokens;
        line.approximate = t.approximate;
        line.cost = (static_cast<double>(t.prompt_tokens) * pricing.input_per_1k
                     + static_cast<double>(t.completion_tokens) * pricing.output_per_1k)
                    / 1000.0;
        report.total += line.cost;
        report.lines.push_back(std::move(line));
    }
    return report;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::shared_ptr<CacheStore> cache,
                 Pricing pricing)
    : backend_(std::move(backend)), cache_(std::move(cache)), pricing_(pricing) {}

Completion Gateway::complete(const CompletionRequest& req, const std::string& usage_label) {
    return cached_complete(req, usage_label, CacheUse::refresh);
}

Completion Gateway::cached_complete(const CompletionRequest& req, const std::string& usage_label,
                                    CacheUse use) {
    issued_.fetch_add(1);
    const std::string key = cache_ ? CacheStore::key_for(backend_->id(), req) : std::string();
    if (cache_ && use == CacheUse::prefer) {
        if (auto hit = cache_->get(key)) {
            cache_hits_.fetch_add(1);
            std::lock_guard lock(ledger_mutex_);
            ledger_.add(usage_label, hit->usage);
            return *hit;
        }
    }
    Completion completion = backend_->complete(req);
    backend_calls_.fetch_add(1);
    if (cache_) cache_->put(key, backend_->id(), req, completion);
    {
        std::lock_guard lock(ledger_mutex_);
        ledger_.add(usage_label, completion.usage);
    }
    return completion;
}

UsageLedger Gateway::ledger_snapshot() const {
    std::lock_guard lock(ledger_mutex_);
    return ledger_;
}

CostReport Gateway::cost_report() const {
    return estimate_cost(ledger_snapshot(), pricing_);
}

}  // namespace selficl
