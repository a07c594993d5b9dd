#include <doctest.h>

#include "helpers.hpp"
#include "selficl/config.hpp"
#include "selficl/errors.hpp"

using namespace selficl;

TEST_CASE("a minimal config fills in every default") {
    auto doc = run_document_from_json("{\"manifest\": \"tasks\"}");
    CHECK(doc.manifest == "tasks");
    CHECK(doc.task.empty());
    CHECK(doc.mode == "direct");
    CHECK(doc.shots.k == 3);
    CHECK(doc.shots.diversity_hints);
    CHECK_FALSE(doc.shots.random_labels);
    CHECK(doc.shots.seed == 0);
    CHECK(doc.style == "streaming");
    CHECK(doc.batch_size == 4);
    CHECK_FALSE(doc.sample_shots.has_value());
    CHECK(doc.workers == 1);
    CHECK(doc.out == "out");
    CHECK(doc.cache.empty());
    CHECK(doc.backend.kind == "mock");
    CHECK(doc.backend.model == "text-davinci-003");
    CHECK(doc.backend.fallback == "(A)");
    CHECK(doc.backend.temperature == 0.0);
    CHECK(doc.backend.max_tokens == 1024);
    CHECK(doc.backend.max_retries == 3);
    CHECK(doc.backend.pricing.input_per_1k == doctest::Approx(0.02));
    CHECK(doc.backend.pricing.output_per_1k == doctest::Approx(0.02));
    CHECK(doc.analysis.provider == "hashed");
    CHECK(doc.analysis.dimension == 384);
    CHECK(doc.analysis.seeds == 5);
}

TEST_CASE("explicit values land where they should") {
    auto doc = run_document_from_json(R"({
        "manifest": "m.task",
        "task": "movie_mini",
        "mode": "cot",
        "shots": {"k": 4, "diversity_hints": false, "random_labels": true, "seed": 9},
        "style": "batch",
        "batch_size": 8,
        "sample_shots": 2,
        "workers": 3,
        "out": "runs",
        "cache": "cache.jsonl",
        "backend": {
            "kind": "http",
            "endpoint": "https://api.example.com/v1/completions",
            "model": "davinci",
            "api_key_env": "MY_KEY",
            "max_retries": 1,
            "timeout_ms": 1000,
            "backoff_base_ms": 10,
            "temperature": 0.5,
            "max_tokens": 256,
            "pricing": {"input_per_1k": 0.01, "output_per_1k": 0.03}
        },
        "analysis": {"provider": "http", "endpoint": "https://api.example.com/v1/embeddings",
                     "model": "embedder", "dimension": 16, "seeds": 2}
    })");
    CHECK(doc.task == "movie_mini");
    CHECK(doc.mode == "cot");
    CHECK(doc.shots.k == 4);
    CHECK_FALSE(doc.shots.diversity_hints);
    CHECK(doc.shots.random_labels);
    CHECK(doc.shots.seed == 9);
    CHECK(doc.style == "batch");
    CHECK(doc.batch_size == 8);
    REQUIRE(doc.sample_shots.has_value());
    CHECK(*doc.sample_shots == 2);
    CHECK(doc.workers == 3);
    CHECK(doc.cache == "cache.jsonl");
    CHECK(doc.backend.kind == "http");
    CHECK(doc.backend.endpoint == "https://api.example.com/v1/completions");
    CHECK(doc.backend.api_key_env == "MY_KEY");
    CHECK(doc.backend.pricing.output_per_1k == doctest::Approx(0.03));
    CHECK(doc.analysis.provider == "http");
    CHECK(doc.analysis.seeds == 2);

    // null sample_shots means unset
    auto unset_doc = run_document_from_json(
        "{\"manifest\": \"m\", \"sample_shots\": null}");
    CHECK_FALSE(unset_doc.sample_shots.has_value());
}

TEST_CASE("typos fail loudly at every level") {
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"modes\": \"direct\"}"),
                    ConfigError);
    CHECK_THROWS_AS(
        run_document_from_json("{\"manifest\": \"m\", \"shots\": {\"shots\": 3}}"),
        ConfigError);
    CHECK_THROWS_AS(
        run_document_from_json("{\"manifest\": \"m\", \"backend\": {\"speed\": 11}}"),
        ConfigError);
    CHECK_THROWS_AS(
        run_document_from_json(
            "{\"manifest\": \"m\", \"backend\": {\"pricing\": {\"per_call\": 1}}}"),
        ConfigError);
    CHECK_THROWS_AS(
        run_document_from_json("{\"manifest\": \"m\", \"analysis\": {\"mode\": \"x\"}}"),
        ConfigError);
}

TEST_CASE("validation rejects impossible settings") {
    CHECK_THROWS_AS(run_document_from_json("{}"), ConfigError);  // manifest missing
    CHECK_THROWS_AS(run_document_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(run_document_from_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"mode\": \"zen\"}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"style\": \"turbo\"}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"batch_size\": 0}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"workers\": 0}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"sample_shots\": 0}"),
                    ConfigError);
    // more sampled shots than generated demos
    CHECK_THROWS_AS(run_document_from_json("{\"manifest\": \"m\", \"sample_shots\": 4}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"backend\": {\"kind\": \"carrier-pigeon\"}}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"backend\": {\"kind\": \"http\"}}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"analysis\": {\"provider\": \"psychic\"}}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"analysis\": {\"provider\": \"http\"}}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"analysis\": {\"dimension\": 0}}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"backend\": {\"max_tokens\": 0}}"),
                    ConfigError);
    CHECK_THROWS_AS(run_document_from_json(
                        "{\"manifest\": \"m\", \"backend\": {\"max_retries\": -1}}"),
                    ConfigError);
}

TEST_CASE("documents survive a serialization round trip") {
    auto doc = run_document_from_json(R"({
        "manifest": "m.task",
        "mode": "cot",
        "shots": {"k": 5, "seed": 77},
        "sample_shots": 1,
        "cache": "c.jsonl",
        "backend": {"fallback": "True", "model": "test-model"}
    })");
    auto twice = run_document_from_json(run_document_to_json(doc));
    CHECK(run_document_to_json(twice) == run_document_to_json(doc));
    CHECK(twice.shots.k == 5);
    CHECK(twice.shots.seed == 77);
    CHECK(twice.backend.fallback == "True");
    REQUIRE(twice.sample_shots.has_value());
    CHECK(*twice.sample_shots == 1);
}

TEST_CASE("load_run_document wraps file problems as config errors") {
    TempDir dir;
    CHECK_THROWS_AS(load_run_document(dir.file("missing.json")), ConfigError);
    write_text(dir.file("run.json"), "{\"manifest\": \"tasks\"}");
    CHECK(load_run_document(dir.file("run.json")).manifest == "tasks");
}
