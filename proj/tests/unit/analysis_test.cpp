#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <thread>

#include "helpers.hpp"
#include "selficl/analysis.hpp"
#include "selficl/errors.hpp"
#include "selficl/evalkit.hpp"
#include "selficl/util.hpp"

using namespace selficl;

TEST_CASE("hashed embeddings are deterministic unit vectors") {
    HashedEmbeddingProvider provider(64);
    CHECK(provider.id() == "hashed-64");
    CHECK(provider.dimension() == 64);

    auto a = provider.embed("the quick brown fox");
    auto b = provider.embed("the quick brown fox");
    REQUIRE(a.components.size() == 64);
    CHECK(a.components == b.components);

    double norm = 0.0;
    for (double x : a.components) norm += x * x;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));

    auto c = provider.embed("a completely different sentence altogether");
    CHECK(a.components != c.components);

    // token order matters
    auto d = provider.embed("fox brown quick the");
    CHECK(a.components != d.components);

    // no tokens means a zero vector, deliberately not normalized
    auto z = provider.embed("   ");
    CHECK(std::all_of(z.components.begin(), z.components.end(),
                      [](double x) { return x == 0.0; }));

    CHECK_THROWS_AS(HashedEmbeddingProvider{0}, ConfigError);
}

TEST_CASE("cosine similarity basics and typed errors") {
    EmbeddingVector x{{1.0, 0.0}};
    EmbeddingVector y{{0.0, 1.0}};
    EmbeddingVector nx{{-1.0, 0.0}};
    CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
    CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));
    CHECK(cosine_similarity(x, nx) == doctest::Approx(-1.0));
    CHECK(cosine_similarity(x, y) == cosine_similarity(y, x));

    // scale invariance
    EmbeddingVector sx{{7.5, 0.0}};
    CHECK(cosine_similarity(sx, x) == doctest::Approx(1.0));

    EmbeddingVector three{{1.0, 2.0, 3.0}};
    CHECK_THROWS_AS(cosine_similarity(x, three), DimensionMismatch);
    EmbeddingVector empty;
    CHECK_THROWS_AS(cosine_similarity(empty, empty), DimensionMismatch);
    EmbeddingVector zero{{0.0, 0.0}};
    CHECK_THROWS_AS(cosine_similarity(x, zero), ZeroVector);
}

TEST_CASE("self distance is exactly zero and swapping flips the sign exactly") {
    HashedEmbeddingProvider provider(128);
    const std::string query = "which pet fits a small apartment";
    std::vector<std::string> pseudo = {"which pet fits a boat", "which pet fits a castle",
                                       "which pet fits a tent"};
    std::vector<std::string> real = {"which pet fits a farm", "which pet fits an office",
                                     "which pet fits a cave"};

    CHECK(query_input_distance(provider, query, pseudo, pseudo) == 0.0);
    CHECK(query_input_distance(provider, query, real, real) == 0.0);

    auto forward = query_input_distance_parts(provider, query, pseudo, real);
    auto backward = query_input_distance_parts(provider, query, real, pseudo);
    CHECK(forward.distance == -backward.distance);
    CHECK(forward.mean_sim_pseudo == backward.mean_sim_real);
    CHECK(forward.distance ==
          doctest::Approx(forward.mean_sim_pseudo - forward.mean_sim_real));

    // the mean does not care about the order of the sampled inputs
    auto reversed_real = real;
    std::reverse(reversed_real.begin(), reversed_real.end());
    auto shuffled = query_input_distance_parts(provider, query, pseudo, reversed_real);
    CHECK(shuffled.distance == doctest::Approx(forward.distance).epsilon(1e-12));

    CHECK_THROWS_AS(query_input_distance(provider, query, pseudo, {"just one"}),
                    LengthMismatch);
    CHECK_THROWS_AS(query_input_distance(provider, query, {}, {}), LengthMismatch);
}

TEST_CASE("similarity_gap and seed_stats") {
    CHECK(similarity_gap({0.1, -0.1, 0.3}) == doctest::Approx(0.1));
    CHECK_THROWS_AS(similarity_gap({}), EmptyList);

    auto stats = seed_stats({1.0, 2.0, 3.0, 4.0});
    CHECK(stats.mean == doctest::Approx(2.5));
    CHECK(stats.stddev == doctest::Approx(1.118033988749895).epsilon(1e-12));

    auto lone = seed_stats({0.42});
    CHECK(lone.mean == doctest::Approx(0.42));
    CHECK(lone.stddev == 0.0);
    CHECK_THROWS_AS(seed_stats({}), EmptyList);
}

namespace {

TaskManifestEntry fixture_entry(const std::string& name) {
    for (auto& e : load_task_manifest(fixture_path("tasks"))) {
        if (e.task.name == name) return e;
    }
    throw std::runtime_error("no fixture task " + name);
}

std::vector<PredictionRecord> fake_records(const Dataset& dataset) {
    std::vector<PredictionRecord> records;
    for (std::size_t i = 0; i < dataset.queries.size(); ++i) {
        PredictionRecord r;
        r.task = dataset.task.name;
        r.query_id = dataset.queries[i].id;
        r.mode = "direct";
        r.k = 3;
        for (std::size_t d = 1; d <= 3; ++d) {
            // pseudo inputs: paraphrased cousins of other dataset entries
            const std::string& base = dataset.queries[(i + d) % dataset.queries.size()].input;
            r.demos.push_back({base + " (variant " + std::to_string(d) + ")", "(A)"});
        }
        r.answer = "A";
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace

TEST_CASE("analyze_run aggregates per-seed gaps over usable records") {
    auto dataset = load_task(fixture_entry("movie_mini"));
    auto records = fake_records(dataset);
    HashedEmbeddingProvider provider(256);

    auto report = analyze_run(provider, dataset, records, 3, 99);
    CHECK(report.task == "movie_mini");
    CHECK(report.queries == 6);
    CHECK(report.seeds == 3);
    CHECK(report.in_band == (std::abs(report.gap_mean) <= 0.05));
    CHECK(std::isfinite(report.gap_std));
    CHECK(report.mean_sim_pseudo > -1.0);
    CHECK(report.mean_sim_real < 1.0);

    // same seeds, same answer
    auto again = analyze_run(provider, dataset, records, 3, 99);
    CHECK(again.gap_mean == report.gap_mean);
    CHECK(again.gap_std == report.gap_std);

    // another base seed samples other real inputs
    auto moved = analyze_run(provider, dataset, records, 3, 100);
    CHECK(moved.gap_mean != report.gap_mean);

    // failed records and records without demos are skipped
    records[0].failure = "NoAnswerFound: nope";
    records[1].demos.clear();
    auto partial = analyze_run(provider, dataset, records, 2, 99);
    CHECK(partial.queries == 4);

    // nothing analyzable is a typed error
    std::vector<PredictionRecord> bare;
    for (const auto& q : dataset.queries) {
        PredictionRecord r;
        r.query_id = q.id;
        bare.push_back(r);
    }
    CHECK_THROWS_AS(analyze_run(provider, dataset, bare, 2, 99), EmptyList);
    CHECK_THROWS_AS(analyze_run(provider, dataset, records, 0, 99), EmptyList);
}

TEST_CASE("write_analysis emits the csv and the gap chart") {
    GapReport inside;
    inside.task = "alpha";
    inside.gap_mean = 0.0123;
    inside.gap_std = 0.004;
    inside.in_band = true;
    inside.mean_sim_pseudo = 0.61;
    inside.mean_sim_real = 0.60;
    inside.queries = 6;
    inside.seeds = 5;

    GapReport outside;
    outside.task = "beta";
    outside.gap_mean = 0.12;
    outside.gap_std = 0.01;
    outside.in_band = false;
    outside.mean_sim_pseudo = 0.7;
    outside.mean_sim_real = 0.58;
    outside.queries = 6;
    outside.seeds = 5;

    TempDir dir;
    write_analysis({inside, outside}, dir.file("out"));

    auto csv = read_file(dir.file("out/analysis.csv"));
    CHECK(csv.find("task,gap_mean,gap_std,in_band,mean_sim_pseudo,mean_sim_real,queries,seeds\n")
          == 0);
    CHECK(csv.find("alpha,0.012300,0.004000,1,0.610000,0.600000,6,5\n") != std::string::npos);
    CHECK(csv.find("beta,0.120000,0.010000,0,") != std::string::npos);
    CHECK(csv.find("all,0.066150,") != std::string::npos);

    auto chart = read_file(dir.file("out/chart.txt"));
    CHECK(chart.find("| marks +-0.05") != std::string::npos);
    CHECK(chart.find("+0.0123  in band") != std::string::npos);
    CHECK(chart.find("+0.1200\n") != std::string::npos);
    // every row carries a marker
    CHECK(std::count(chart.begin(), chart.end(), '*') == 2);
}

TEST_CASE("http embedding provider parses both response shapes") {
    httplib::Server server;
    std::string seen_auth;
    server.Post("/flat", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        res.set_content("{\"embedding\":[0.5,0.25,0.25]}", "application/json");
    });
    server.Post("/nested", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"data\":[{\"embedding\":[1.0,0.0]}]}", "application/json");
    });
    server.Post("/down", [&](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("no", "text/plain");
    });
    server.Post("/shapeless", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"surprise\":true}", "application/json");
    });

    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    setenv("SELFICL_EMB_KEY", "emb-key", 1);
    auto provider_for = [&](const std::string& path) {
        HttpEmbeddingConfig cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + path;
        cfg.model = "embedder";
        cfg.api_key_env = "SELFICL_EMB_KEY";
        return HttpEmbeddingProvider(cfg);
    };

    auto flat = provider_for("/flat");
    CHECK(flat.embed("hi").components == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(seen_auth == "Bearer emb-key");
    CHECK(flat.id().find("embedder") != std::string::npos);

    CHECK(provider_for("/nested").embed("hi").components == std::vector<double>{1.0, 0.0});
    CHECK_THROWS_AS(provider_for("/down").embed("hi"), ProviderUnavailable);
    CHECK_THROWS_AS(provider_for("/shapeless").embed("hi"), ProviderUnavailable);

    server.stop();
    server_thread.join();

    HttpEmbeddingConfig bare;
    CHECK_THROWS_AS(HttpEmbeddingProvider{bare}, ConfigError);
}
