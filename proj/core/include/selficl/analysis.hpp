#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selficl/evalkit.hpp"
#include "selficl/pipeline.hpp"

namespace selficl {

struct EmbeddingVector {
    std::vector<double> components;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual EmbeddingVector embed(const std::string& text) = 0;
};

// Fully offline provider: tokens are hashed into a fixed number of signed
// buckets, with a second position-salted bucket per token, then the vector
// is length normalized. Not semantically meaningful, but deterministic,
// and similar texts land on similar vectors, which is all the gap
// statistics need.
class HashedEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HashedEmbeddingProvider(std::size_t dimension = 384);
    std::string id() const override;
    EmbeddingVector embed(const std::string& text) override;
    std::size_t dimension() const { return dimension_; }

private:
    std::size_t dimension_;
};

struct HttpEmbeddingConfig {
    std::string endpoint;
    std::string model;
    std::string api_key_env = "SELFICL_API_KEY";
    int timeout_ms = 30000;
};

// OpenAI style embeddings endpoint; any transport or shape problem is
// reported as ProviderUnavailable
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);
    std::string id() const override;
    EmbeddingVector embed(const std::string& text) override;

private:
    HttpEmbeddingConfig config_;
    std::string api_key_;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct DistanceParts {
    double distance = 0.0;         // mean sim to pseudo minus mean sim to real
    double mean_sim_pseudo = 0.0;
    double mean_sim_real = 0.0;
};

// both input lists must have the same non-zero length; with identical lists
// the distance is exactly 0, and swapping the lists flips its sign exactly
DistanceParts query_input_distance_parts(EmbeddingProvider& provider, const std::string& query,
                                         const std::vector<std::string>& pseudo_inputs,
                                         const std::vector<std::string>& real_inputs);
double query_input_distance(EmbeddingProvider& provider, const std::string& query,
                            const std::vector<std::string>& pseudo_inputs,
                            const std::vector<std::string>& real_inputs);

// mean over per query distances
double similarity_gap(const std::vector<double>& per_query_distances);

struct SeedStats {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

SeedStats seed_stats(const std::vector<double>& per_seed_values);

struct GapReport {
    std::string task;
    double gap_mean = 0.0;
    double gap_std = 0.0;
    bool in_band = false;  // |mean| <= 0.05
    double mean_sim_pseudo = 0.0;
    double mean_sim_real = 0.0;
    std::size_t queries = 0;
    std::size_t seeds = 0;
};

// gap statistics for one finished run: for every record with demos, the
// demo inputs are compared against the same number of real inputs sampled
// from the dataset (never the query itself), once per seed
GapReport analyze_run(EmbeddingProvider& provider, const Dataset& dataset,
                      const std::vector<PredictionRecord>& records, std::size_t seeds,
                      std::uint64_t base_seed);

// analysis.csv plus an ASCII chart of the per task gaps with the band edges
// marked
void write_analysis(const std::vector<GapReport>& reports, const std::string& out_dir);

}  // namespace selficl
