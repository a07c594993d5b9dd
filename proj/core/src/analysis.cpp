#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "selficl/analysis.hpp"
#include "selficl/errors.hpp"
#include "selficl/util.hpp"

namespace selficl {

HashedEmbeddingProvider::HashedEmbeddingProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashedEmbeddingProvider::id() const {
    return "hashed-" + std::to_string(dimension_);
}

EmbeddingVector HashedEmbeddingProvider::embed(const std::string& text) {
    EmbeddingVector v;
    v.components.assign(dimension_, 0.0);
    const std::vector<std::string> tokens = whitespace_tokens(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::uint64_t hb = fnv1a64(tokens[i]);
        v.components[hb % dimension_] += (hb & 1) ? 1.0 : -1.0;
        // second bucket salted with the token position keeps word order
        // visible to the vector
        const std::uint64_t hp = splitmix64(hb ^ splitmix64(i + 0x9e37));
        v.components[hp % dimension_] += (hp & 1) ? 0.5 : -0.5;
    }
    double norm_sq = 0.0;
    for (double x : v.components) norm_sq += x * x;
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& x : v.components) x *= inv;
    }
    return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config)
    : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("embedding provider needs an endpoint");
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    }
}

std::string HttpEmbeddingProvider::id() const {
    return "http:" + config_.endpoint + "#" + config_.model;
}

EmbeddingVector HttpEmbeddingProvider::embed(const std::string& text) {
    std::size_t scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos) {
        throw ProviderUnavailable("endpoint '" + config_.endpoint + "' has no scheme");
    }
    std::size_t slash = config_.endpoint.find('/', scheme + 3);
    const std::string base =
        slash == std::string::npos ? config_.endpoint : config_.endpoint.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);

    nlohmann::json body;
    body["model"] = config_.model;
    body["input"] = text;

    httplib::Client client(base);
    client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderUnavailable("transport error talking to " + config_.endpoint + ": "
                                  + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ProviderUnavailable("HTTP " + std::to_string(res->status) + " from "
                                  + config_.endpoint);
    }
    try {
        nlohmann::json j = nlohmann::json::parse(res->body);
        const nlohmann::json* vec = nullptr;
        if (j.contains("embedding") && j["embedding"].is_array()) {
            vec = &j["embedding"];
        } else if (j.contains("data") && j["data"].is_array() && !j["data"].empty()
                   && j["data"][0].contains("embedding")) {
            vec = &j["data"][0]["embedding"];
        }
        if (!vec) throw ProviderUnavailable("response carries no embedding array");
        EmbeddingVector v;
        v.components.reserve(vec->size());
        for (const auto& x : *vec) v.components.push_back(x.get<double>());
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw ProviderUnavailable(std::string("unparseable embedding response: ") + e.what());
    }
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.components.size() != b.components.size()) {
        throw DimensionMismatch("cosine over " + std::to_string(a.components.size()) + " and "
                                + std::to_string(b.components.size()) + " dimensions");
    }
    if (a.components.empty()) throw DimensionMismatch("cosine over empty vectors");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.components.size(); ++i) {
        dot += a.components[i] * b.components[i];
        na += a.components[i] * a.components[i];
        nb += b.components[i] * b.components[i];
    }
    if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine is undefined for zero length vectors");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

namespace {

double mean_similarity(EmbeddingProvider& provider, const EmbeddingVector& query,
                       const std::vector<std::string>& inputs) {
    double sum = 0.0;
    for (const std::string& input : inputs) {
        EmbeddingVector v = provider.embed(input);
        sum += cosine_similarity(query, v);
    }
    return sum / static_cast<double>(inputs.size());
}

}  // namespace

DistanceParts query_input_distance_parts(EmbeddingProvider& provider, const std::string& query,
                                         const std::vector<std::string>& pseudo_inputs,
                                         const std::vector<std::string>& real_inputs) {
    if (pseudo_inputs.size() != real_inputs.size()) {
        throw LengthMismatch("comparing " + std::to_string(pseudo_inputs.size())
                             + " pseudo inputs against " + std::to_string(real_inputs.size())
                             + " real inputs");
    }
    if (pseudo_inputs.empty()) throw LengthMismatch("no inputs to compare");
    const EmbeddingVector q = provider.embed(query);
    DistanceParts parts;
    parts.mean_sim_pseudo = mean_similarity(provider, q, pseudo_inputs);
    parts.mean_sim_real = mean_similarity(provider, q, real_inputs);
    parts.distance = parts.mean_sim_pseudo - parts.mean_sim_real;
    return parts;
}

double query_input_distance(EmbeddingProvider& provider, const std::string& query,
                            const std::vector<std::string>& pseudo_inputs,
                            const std::vector<std::string>& real_inputs) {
    return query_input_distance_parts(provider, query, pseudo_inputs, real_inputs).distance;
}

double similarity_gap(const std::vector<double>& per_query_distances) {
    if (per_query_distances.empty()) throw EmptyList("similarity gap over no queries");
    double sum = 0.0;
    for (double d : per_query_distances) sum += d;
    return sum / static_cast<double>(per_query_distances.size());
}

SeedStats seed_stats(const std::vector<double>& per_seed_values) {
    if (per_seed_values.empty()) throw EmptyList("seed stats over no values");
    SeedStats stats;
    for (double v : per_seed_values) stats.mean += v;
    stats.mean /= static_cast<double>(per_seed_values.size());
    double var = 0.0;
    for (double v : per_seed_values) var += (v - stats.mean) * (v - stats.mean);
    var /= static_cast<double>(per_seed_values.size());
    stats.stddev = std::sqrt(var);
    return stats;
}

namespace {

// k dataset inputs drawn without replacement, skipping the query itself
std::vector<std::string> sample_real_inputs(const Dataset& dataset, std::size_t skip_index,
                                            std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> pool;
    pool.reserve(dataset.queries.size());
    for (std::size_t i = 0; i < dataset.queries.size(); ++i) {
        if (i != skip_index) pool.push_back(i);
    }
    if (pool.size() < k) {
        throw LengthMismatch("task '" + dataset.task.name + "' has only "
                             + std::to_string(pool.size()) + " other inputs, need "
                             + std::to_string(k));
    }
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::string> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(dataset.queries[pool[i]].input);
    return out;
}

}  // namespace

GapReport analyze_run(EmbeddingProvider& provider, const Dataset& dataset,
                      const std::vector<PredictionRecord>& records, std::size_t seeds,
                      std::uint64_t base_seed) {
    if (seeds == 0) throw EmptyList("need at least one seed");
    std::unordered_map<std::string, std::size_t> index_by_id;
    for (std::size_t i = 0; i < dataset.queries.size(); ++i) {
        index_by_id[dataset.queries[i].id] = i;
    }

    GapReport report;
    report.task = dataset.task.name;
    report.seeds = seeds;

    std::vector<double> per_seed_gaps;
    double sim_pseudo_sum = 0.0;
    double sim_real_sum = 0.0;
    std::size_t parts_count = 0;
    for (std::size_t s = 0; s < seeds; ++s) {
        std::vector<double> distances;
        for (const PredictionRecord& record : records) {
            if (record.demos.empty() || !record.failure.empty()) continue;
            auto it = index_by_id.find(record.query_id);
            if (it == index_by_id.end()) continue;
            const std::size_t qi = it->second;
            std::vector<std::string> pseudo;
            pseudo.reserve(record.demos.size());
            for (const Demo& d : record.demos) pseudo.push_back(d.input);
            const std::uint64_t seed =
                derive_seed(base_seed + s, dataset.task.name + ":" + record.query_id);
            const std::vector<std::string> real =
                sample_real_inputs(dataset, qi, pseudo.size(), seed);
            const DistanceParts parts = query_input_distance_parts(
                provider, dataset.queries[qi].input, pseudo, real);
            distances.push_back(parts.distance);
            sim_pseudo_sum += parts.mean_sim_pseudo;
            sim_real_sum += parts.mean_sim_real;
            ++parts_count;
        }
        if (distances.empty()) {
            throw EmptyList("task '" + dataset.task.name
                            + "' has no usable records with demos to analyze");
        }
        if (s == 0) report.queries = distances.size();
        per_seed_gaps.push_back(similarity_gap(distances));
    }

    const SeedStats stats = seed_stats(per_seed_gaps);
    report.gap_mean = stats.mean;
    report.gap_std = stats.stddev;
    report.in_band = std::abs(report.gap_mean) <= 0.05;
    report.mean_sim_pseudo = sim_pseudo_sum / static_cast<double>(parts_count);
    report.mean_sim_real = sim_real_sum / static_cast<double>(parts_count);
    return report;
}

namespace {

// one axis row: [-0.20, +0.20] across 41 columns, band edges at +-0.05
std::string gap_bar(double gap) {
    const int width = 41;
    const double span = 0.20;
    std::string bar(width, '.');
    const int center = width / 2;
    const int band = static_cast<int>(std::lround(0.05 / span * center));
    bar[static_cast<std::size_t>(center)] = ':';
    bar[static_cast<std::size_t>(center - band)] = '|';
    bar[static_cast<std::size_t>(center + band)] = '|';
    double clamped = std::clamp(gap, -span, span);
    int pos = center + static_cast<int>(std::lround(clamped / span * center));
    bar[static_cast<std::size_t>(pos)] = '*';
    return bar;
}

}  // namespace

void write_analysis(const std::vector<GapReport>& reports, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw OutputUnwritable("cannot create " + out_dir + ": " + ec.message());

    std::ostringstream csv;
    csv << "task,gap_mean,gap_std,in_band,mean_sim_pseudo,mean_sim_real,queries,seeds\n";
    double gap_sum = 0.0;
    for (const GapReport& r : reports) {
        csv << r.task << ',' << format_fixed(r.gap_mean, 6) << ',' << format_fixed(r.gap_std, 6)
            << ',' << (r.in_band ? 1 : 0) << ',' << format_fixed(r.mean_sim_pseudo, 6) << ','
            << format_fixed(r.mean_sim_real, 6) << ',' << r.queries << ',' << r.seeds << '\n';
        gap_sum += r.gap_mean;
    }
    if (!reports.empty()) {
        csv << "all," << format_fixed(gap_sum / static_cast<double>(reports.size()), 6)
            << ",,,,,,\n";
    }
    atomic_write_file((fs::path(out_dir) / "analysis.csv").string(), csv.str());

    std::size_t name_width = 4;
    for (const GapReport& r : reports) name_width = std::max(name_width, r.task.size());
    std::ostringstream chart;
    chart << "similarity gap per task, axis -0.20 .. +0.20, | marks +-0.05\n\n";
    for (const GapReport& r : reports) {
        char value[32];
        std::snprintf(value, sizeof(value), "%+.4f", r.gap_mean);
        chart << (r.task + std::string(name_width - r.task.size(), ' ')) << "  ["
              << gap_bar(r.gap_mean) << "]  " << value << (r.in_band ? "  in band" : "") << '\n';
    }
    atomic_write_file((fs::path(out_dir) / "chart.txt").string(), chart.str());
}

}  // namespace selficl
