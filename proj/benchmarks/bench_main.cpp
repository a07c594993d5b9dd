// Micro benchmarks for the hot paths: prompt assembly, completion parsing,
// answer extraction, the paired significance test, hashing and embeddings.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "selficl/analysis.hpp"
#include "selficl/evalkit.hpp"
#include "selficl/extraction.hpp"
#include "selficl/gateway.hpp"
#include "selficl/prompt.hpp"
#include "selficl/task.hpp"
#include "selficl/util.hpp"

namespace {

using namespace selficl;

TaskSpec bench_task() {
    TaskSpec task;
    task.name = "bench";
    task.description = "Pick the option that best matches the described movie.";
    return task;
}

const std::string kQuery =
    "Find a movie similar to Interstellar, Arrival, Gravity:\n"
    "Options:\n(A) Contact\n(B) Grease\n(C) Cars\n(D) Up";

std::vector<Demo> bench_demos() {
    return {
        {"Find a movie similar to Alien, Predator, The Thing:\n"
         "Options:\n(A) Event Horizon\n(B) Mamma Mia\n(C) Babe\n(D) Elf",
         "(A)"},
        {"Find a movie similar to Heat, Ronin, Drive:\n"
         "Options:\n(A) The Notebook\n(B) Collateral\n(C) Frozen\n(D) Cars 2",
         "(B)"},
        {"Find a movie similar to Se7en, Zodiac, Memories of Murder:\n"
         "Options:\n(A) Trolls\n(B) Sing\n(C) Prisoners\n(D) Minions",
         "(C)"},
    };
}

void bm_step1_prompt(benchmark::State& state) {
    const TaskSpec task = bench_task();
    for (auto _ : state) {
        benchmark::DoNotOptimize(step1_prompt(task, kQuery, 3, true));
    }
}
BENCHMARK(bm_step1_prompt);

void bm_step3_prompt(benchmark::State& state) {
    const TaskSpec task = bench_task();
    const std::vector<Demo> demos = bench_demos();
    for (auto _ : state) {
        benchmark::DoNotOptimize(step3_prompt(task, demos, kQuery, Mode::direct));
    }
}
BENCHMARK(bm_step3_prompt);

void bm_parse_pseudo_inputs(benchmark::State& state) {
    std::string completion;
    const std::vector<Demo> demos = bench_demos();
    for (std::size_t i = 0; i < demos.size(); ++i) {
        completion += std::to_string(i + 1) + ") " + demos[i].input + "\n";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_pseudo_inputs(completion, 3));
    }
}
BENCHMARK(bm_parse_pseudo_inputs);

void bm_extract_answer(benchmark::State& state) {
    const TaskSpec task = bench_task();
    const LabelSpace space = infer_label_space(task, kQuery);
    const std::string completion =
        "All three picks are hard science fiction about first contact and "
        "survival, and only one option shares that register. So the answer "
        "is (A).";
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_answer(space, completion));
    }
}
BENCHMARK(bm_extract_answer);

void bm_mcnemar_exact_path(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnemar_one_sided(15, 5));
    }
}
BENCHMARK(bm_mcnemar_exact_path);

void bm_mcnemar_lgamma_path(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(mcnemar_one_sided(200, 150));
    }
}
BENCHMARK(bm_mcnemar_lgamma_path);

void bm_hashed_embedding(benchmark::State& state) {
    HashedEmbeddingProvider provider(384);
    for (auto _ : state) {
        benchmark::DoNotOptimize(provider.embed(kQuery));
    }
}
BENCHMARK(bm_hashed_embedding);

void bm_cosine_similarity(benchmark::State& state) {
    HashedEmbeddingProvider provider(384);
    const EmbeddingVector a = provider.embed(kQuery);
    const EmbeddingVector b = provider.embed(bench_demos().front().input);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cosine_similarity(a, b));
    }
}
BENCHMARK(bm_cosine_similarity);

void bm_cache_key(benchmark::State& state) {
    CompletionRequest req;
    req.model = "test-model";
    req.prompt = kQuery;
    req.max_tokens = 1024;
    for (auto _ : state) {
        benchmark::DoNotOptimize(CacheStore::key_for("mock", req));
    }
}
BENCHMARK(bm_cache_key);

void bm_sha256_1k(benchmark::State& state) {
    const std::string payload(1024, 'x');
    for (auto _ : state) {
        benchmark::DoNotOptimize(sha256_hex(payload));
    }
}
BENCHMARK(bm_sha256_1k);

}  // namespace

BENCHMARK_MAIN();
