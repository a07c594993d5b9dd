#include <doctest.h>

#include <memory>
#include <set>

#include "helpers.hpp"
#include "selficl/errors.hpp"
#include "selficl/pipeline.hpp"
#include "selficl/util.hpp"

using namespace selficl;

namespace {

TaskSpec pets_task() {
    TaskSpec t;
    t.name = "pets";
    t.description = "Pick the pet that fits the home.";
    return t;
}

std::vector<Query> pet_queries(std::size_t n) {
    std::vector<Query> out;
    for (std::size_t i = 0; i < n; ++i) {
        char id[8];
        std::snprintf(id, sizeof(id), "%04zu", i);
        out.push_back({id, "Which pet fits home number " + std::to_string(i)
                               + "?\nOptions:\n(A) cat " + std::to_string(i)
                               + "\n(B) dog " + std::to_string(i)});
    }
    return out;
}

RunConfig base_config(Mode mode = Mode::direct) {
    RunConfig cfg;
    cfg.task = pets_task();
    cfg.mode = mode;
    cfg.model = "test-model";
    return cfg;
}

struct GatewayRig {
    std::shared_ptr<MockBackend> backend = std::make_shared<MockBackend>("(A)");
    Gateway gateway{backend, nullptr, Pricing{0.02, 0.02}};
};

}  // namespace

TEST_CASE("method labels spell out the run flavor") {
    RunConfig cfg = base_config();
    CHECK(method_label(cfg) == "self-icl-direct");
    cfg.mode = Mode::cot;
    CHECK(method_label(cfg) == "self-icl-cot");
    cfg.shots.k = 0;
    CHECK(method_label(cfg) == "zs-cot");
    cfg.mode = Mode::direct;
    CHECK(method_label(cfg) == "zs-direct");

    cfg = base_config();
    cfg.style = InferenceStyle::batch;
    cfg.shots.diversity_hints = false;
    cfg.shots.random_labels = true;
    cfg.sample_shots = 1;
    CHECK(method_label(cfg) == "self-icl-direct+batch+no-hints+random-labels+shots=1");

    CHECK(style_name(InferenceStyle::streaming) == "streaming");
    CHECK(style_from_name("batch") == InferenceStyle::batch);
    CHECK_THROWS_AS(style_from_name("windowed"), ConfigError);
}

TEST_CASE("streaming three-shot issues five calls per query") {
    GatewayRig rig;
    const std::size_t n = 6;
    Pipeline pipe(rig.gateway, base_config());
    auto records = pipe.run(pet_queries(n));

    CHECK(rig.gateway.issued() == 5 * n);
    CHECK(rig.gateway.backend_calls() == 5 * n);
    REQUIRE(records.size() == n);
    for (const auto& r : records) {
        CHECK(r.failure.empty());
        CHECK(r.k == 3);
        CHECK(r.answer == "A");
        REQUIRE(r.steps.size() == 5);
        CHECK(r.steps[0].step == "step1");
        CHECK(r.steps[1].step == "step2");
        CHECK(r.steps[1].index == 0);
        CHECK(r.steps[3].index == 2);
        CHECK(r.steps[4].step == "step3");
        CHECK_FALSE(r.steps[0].shared);
        REQUIRE(r.demos.size() == 3);
        for (const auto& d : r.demos) CHECK(d.label == "(A)");
        // the demos that were used appear verbatim in the final prompt
        for (const auto& d : r.demos) {
            CHECK(r.steps[4].prompt.find("Q: " + d.input + "\nA: " + d.label)
                  != std::string::npos);
        }
    }

    auto ledger = rig.gateway.ledger_snapshot();
    CHECK(ledger.by_label().at("pets/step1").calls == n);
    CHECK(ledger.by_label().at("pets/step2").calls == 3 * n);
    CHECK(ledger.by_label().at("pets/step3").calls == n);
}

TEST_CASE("reasoning mode turns chains into demo labels") {
    GatewayRig rig;
    Pipeline pipe(rig.gateway, base_config(Mode::cot));
    auto record = pipe.run_query({"0000", pet_queries(1)[0].input});
    CHECK(record.failure.empty());
    CHECK(record.answer == "A");
    REQUIRE(record.demos.size() == 3);
    for (const auto& d : record.demos) {
        CHECK(d.label == "Let's think step by step. We compare the options. The answer is (A).");
    }
    CHECK(ends_with(record.steps.back().prompt, "A: Let's think step by step."));
}

TEST_CASE("zero shots is exactly the baseline, byte for byte") {
    for (Mode mode : {Mode::direct, Mode::cot}) {
        GatewayRig rig;
        RunConfig cfg = base_config(mode);
        cfg.shots.k = 0;
        Pipeline pipe(rig.gateway, cfg);
        auto queries = pet_queries(5);
        auto records = pipe.run(queries);
        CHECK(rig.gateway.issued() == queries.size());
        REQUIRE(records.size() == queries.size());
        for (std::size_t i = 0; i < queries.size(); ++i) {
            auto baseline = pipe.run_baseline(queries[i]);
            CHECK(record_to_json(records[i]) == record_to_json(baseline));
            CHECK(records[i].demos.empty());
            CHECK(records[i].steps.size() == 1);
            CHECK(records[i].steps[0].step == "step3");
        }
    }
}

TEST_CASE("batch style shares one generation call per window") {
    GatewayRig rig;
    RunConfig cfg = base_config();
    cfg.style = InferenceStyle::batch;
    cfg.batch_size = 4;
    Pipeline pipe(rig.gateway, cfg);
    const std::size_t n = 10;  // windows of 4, 4, 2
    auto records = pipe.run(pet_queries(n));

    // one shared generation call plus (k + 1) per query in each window
    CHECK(rig.gateway.issued() == 3 + (3 + 1) * n);
    REQUIRE(records.size() == n);
    for (const auto& r : records) {
        CHECK(r.failure.empty());
        REQUIRE(r.steps.size() == 5);
        CHECK(r.steps[0].step == "step1");
        CHECK(r.steps[0].shared);
        CHECK(r.steps[0].prompt.find("Example instance 1:\n") != std::string::npos);
    }
    // within a window everyone shares the generation trace and the demos
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(records[i].steps[0].prompt == records[0].steps[0].prompt);
        CHECK(records[i].steps[0].completion == records[0].steps[0].completion);
        for (std::size_t d = 0; d < 3; ++d) {
            CHECK(records[i].demos[d].input == records[0].demos[d].input);
        }
    }
    // the second window saw a different reference block
    CHECK(records[4].steps[0].prompt != records[0].steps[0].prompt);

    auto ledger = rig.gateway.ledger_snapshot();
    CHECK(ledger.by_label().at("pets/step1").calls == 3);
    CHECK(ledger.by_label().at("pets/step2").calls == 3 * n);
    CHECK(ledger.by_label().at("pets/step3").calls == n);
}

TEST_CASE("random demo labels only touch labels and the final prompt") {
    auto run_with = [&](bool random_labels, std::uint64_t seed) {
        GatewayRig rig;
        RunConfig cfg = base_config();
        cfg.shots.random_labels = random_labels;
        cfg.shots.seed = seed;
        Pipeline pipe(rig.gateway, cfg);
        return pipe.run(pet_queries(20));
    };

    auto plain = run_with(false, 7);
    auto shuffled = run_with(true, 7);
    auto shuffled_again = run_with(true, 7);
    auto other_seed = run_with(true, 8);

    REQUIRE(plain.size() == shuffled.size());
    bool any_label_differs = false;
    for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(shuffled[i].answer == plain[i].answer);
        CHECK(shuffled[i].failure == plain[i].failure);
        REQUIRE(shuffled[i].demos.size() == plain[i].demos.size());
        for (std::size_t d = 0; d < plain[i].demos.size(); ++d) {
            CHECK(shuffled[i].demos[d].input == plain[i].demos[d].input);
            CHECK((shuffled[i].demos[d].label == "(A)" || shuffled[i].demos[d].label == "(B)"));
            if (shuffled[i].demos[d].label != plain[i].demos[d].label) any_label_differs = true;
        }
        // generation and labeling traces are identical, only the final
        // prompt reflects the replaced labels
        for (std::size_t s = 0; s + 1 < plain[i].steps.size(); ++s) {
            CHECK(shuffled[i].steps[s].prompt == plain[i].steps[s].prompt);
            CHECK(shuffled[i].steps[s].completion == plain[i].steps[s].completion);
        }
        CHECK(record_to_json(shuffled[i]) == record_to_json(shuffled_again[i]));
    }
    CHECK(any_label_differs);

    bool seed_changed_something = false;
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        if (record_to_json(shuffled[i]) != record_to_json(other_seed[i])) {
            seed_changed_something = true;
        }
    }
    CHECK(seed_changed_something);
}

TEST_CASE("sample_shots draws without replacement and keeps order") {
    std::vector<Demo> demos = {{"a", "1"}, {"b", "2"}, {"c", "3"}, {"d", "4"}};
    CHECK_THROWS_AS(sample_shots(demos, 5, 0), InvalidShotCount);

    auto all = sample_shots(demos, 4, 123);
    REQUIRE(all.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(all[i].input == demos[i].input);

    auto one = sample_shots(demos, 1, 42);
    REQUIRE(one.size() == 1);
    CHECK(sample_shots(demos, 1, 42)[0].input == one[0].input);

    // order is preserved and every element is one of the originals
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto two = sample_shots(demos, 2, seed);
        REQUIRE(two.size() == 2);
        auto pos = [&](const Demo& d) {
            for (std::size_t i = 0; i < demos.size(); ++i) {
                if (demos[i].input == d.input) return i;
            }
            return demos.size();
        };
        CHECK(pos(two[0]) < pos(two[1]));
        CHECK(pos(two[1]) < demos.size());
    }

    // different seeds eventually pick different subsets
    std::set<std::string> picks;
    for (std::uint64_t seed = 0; seed < 20; ++seed) picks.insert(sample_shots(demos, 1, seed)[0].input);
    CHECK(picks.size() > 1);
}

TEST_CASE("a one-shot run keeps all five calls but prompts with one demo") {
    GatewayRig rig;
    RunConfig cfg = base_config();
    cfg.sample_shots = 1;
    Pipeline pipe(rig.gateway, cfg);
    auto records = pipe.run(pet_queries(4));
    CHECK(rig.gateway.issued() == 5 * 4);
    for (const auto& r : records) {
        CHECK(r.failure.empty());
        CHECK(r.demos.size() == 1);
        CHECK(r.steps.size() == 5);
    }
    CHECK(method_label(cfg) == "self-icl-direct+shots=1");
}

TEST_CASE("an unparseable generation gets one retry, then a recorded failure") {
    GatewayRig rig;
    RunConfig cfg = base_config();
    Pipeline pipe(rig.gateway, cfg);
    auto queries = pet_queries(2);

    const std::string bad_prompt =
        step1_prompt(cfg.task, queries[0].input, cfg.shots.k, cfg.shots.diversity_hints);
    rig.backend->add_fixture(bad_prompt, "I would rather not make a list today.");

    auto records = pipe.run(queries);
    REQUIRE(records.size() == 2);

    const auto& failed = records[0];
    CHECK_FALSE(failed.failure.empty());
    CHECK(failed.failure.find("InsufficientPseudoInputs") == 0);
    REQUIRE(failed.steps.size() == 2);  // the attempt and its retry
    CHECK(failed.steps[0].step == "step1");
    CHECK(failed.steps[1].step == "step1");
    CHECK(failed.steps[1].index == 1);
    CHECK(failed.answer.empty());
    CHECK(failed.demos.empty());

    // the neighboring query is untouched
    CHECK(records[1].failure.empty());
    CHECK(records[1].answer == "A");

    // 2 attempts for the failed query, 5 calls for the healthy one
    CHECK(rig.gateway.issued() == 2 + 5);
}

TEST_CASE("a failed batch generation fails the whole window") {
    GatewayRig rig;
    RunConfig cfg = base_config();
    cfg.style = InferenceStyle::batch;
    cfg.batch_size = 2;
    Pipeline pipe(rig.gateway, cfg);
    auto queries = pet_queries(2);

    std::vector<std::string> inputs = {queries[0].input, queries[1].input};
    rig.backend->add_fixture(step1_batch_prompt(cfg.task, inputs, cfg.shots.k), "nope");

    auto records = pipe.run(queries);
    REQUIRE(records.size() == 2);
    for (const auto& r : records) {
        CHECK(r.failure.find("InsufficientPseudoInputs") == 0);
        REQUIRE(r.steps.size() == 2);
        CHECK(r.steps[0].shared);
        CHECK(r.steps[1].shared);
    }
    CHECK(rig.gateway.issued() == 2);
}

TEST_CASE("backend outages propagate instead of being recorded") {
    struct DownBackend : Backend {
        std::string id() const override { return "down"; }
        Completion complete(const CompletionRequest&) override {
            throw BackendUnavailable("the wires are cut");
        }
    };
    Gateway gw(std::make_shared<DownBackend>());
    RunConfig cfg = base_config();
    cfg.workers = 2;
    Pipeline pipe(gw, cfg);
    CHECK_THROWS_AS(pipe.run(pet_queries(4)), BackendUnavailable);
}

TEST_CASE("parallel workers produce the same records as a single worker") {
    auto run_with_workers = [&](std::size_t workers) {
        GatewayRig rig;
        RunConfig cfg = base_config();
        cfg.workers = workers;
        Pipeline pipe(rig.gateway, cfg);
        return pipe.run(pet_queries(12));
    };
    auto solo = run_with_workers(1);
    auto pooled = run_with_workers(4);
    REQUIRE(solo.size() == pooled.size());
    for (std::size_t i = 0; i < solo.size(); ++i) {
        CHECK(record_to_json(solo[i]) == record_to_json(pooled[i]));
    }
}

TEST_CASE("records and summaries survive a disk round trip") {
    GatewayRig rig;
    RunConfig cfg = base_config();
    cfg.sample_shots = 2;
    Pipeline pipe(rig.gateway, cfg);
    auto records = pipe.run(pet_queries(3));

    TempDir dir;
    write_records(dir.str(), records);
    auto loaded = read_records(dir.str());
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(record_to_json(loaded[i]) == record_to_json(records[i]));
    }

    auto summary = make_run_summary(cfg, records, rig.gateway.issued(),
                                    rig.gateway.ledger_snapshot());
    CHECK(summary.task == "pets");
    CHECK(summary.method == "self-icl-direct+shots=2");
    CHECK(summary.queries == 3);
    CHECK(summary.failures == 0);
    CHECK(summary.issued == 15);
    REQUIRE(summary.sample_shots.has_value());
    CHECK(*summary.sample_shots == 2);
    CHECK(summary.usage.at("pets/step2").calls == 9);

    write_run_summary(dir.str(), summary);
    auto reloaded = read_run_summary(dir.str());
    CHECK(run_summary_to_json(reloaded) == run_summary_to_json(summary));

    // summaries keep only this task's traffic
    UsageLedger mixed = rig.gateway.ledger_snapshot();
    mixed.add("other/step1", {5, 5, true});
    auto filtered = make_run_summary(cfg, records, rig.gateway.issued(), mixed);
    CHECK(filtered.usage.count("other/step1") == 0);
    CHECK(filtered.usage.size() == 3);
}

TEST_CASE("failures are counted into the run summary") {
    GatewayRig rig;
    RunConfig cfg = base_config();
    Pipeline pipe(rig.gateway, cfg);
    auto queries = pet_queries(2);
    rig.backend->add_fixture(
        step1_prompt(cfg.task, queries[0].input, cfg.shots.k, cfg.shots.diversity_hints),
        "still not a list");
    auto records = pipe.run(queries);
    auto summary = make_run_summary(cfg, records, rig.gateway.issued(),
                                    rig.gateway.ledger_snapshot());
    CHECK(summary.queries == 2);
    CHECK(summary.failures == 1);
}
