#include "selficl/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <random>
#include <thread>

#include "selficl/errors.hpp"
#include "selficl/extraction.hpp"
#include "selficl/util.hpp"

namespace selficl {

std::string style_name(InferenceStyle style) {
    return style == InferenceStyle::streaming ? "streaming" : "batch";
}

InferenceStyle style_from_name(std::string_view name) {
    if (name == "streaming") return InferenceStyle::streaming;
    if (name == "batch") return InferenceStyle::batch;
    throw ConfigError("unknown style '" + std::string(name) + "', expected streaming or batch");
}

std::string method_label(const RunConfig& config) {
    if (config.shots.k == 0) return "zs-" + mode_name(config.mode);
    std::string label = "self-icl-" + mode_name(config.mode);
    if (config.style == InferenceStyle::batch) label += "+batch";
    if (!config.shots.diversity_hints) label += "+no-hints";
    if (config.shots.random_labels) label += "+random-labels";
    if (config.sample_shots) label += "+shots=" + std::to_string(*config.sample_shots);
    return label;
}

std::vector<Demo> sample_shots(const std::vector<Demo>& demos, std::size_t count,
                               std::uint64_t seed) {
    if (count > demos.size()) {
        throw InvalidShotCount("requested " + std::to_string(count) + " shots but only "
                               + std::to_string(demos.size()) + " demos exist");
    }
    std::vector<std::size_t> idx(demos.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        // modulo keeps the draw identical on every platform
        std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    std::vector<Demo> out;
    out.reserve(count);
    for (std::size_t i : idx) out.push_back(demos[i]);
    return out;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const std::size_t spawned = std::min(workers, n);
    for (std::size_t t = 0; t < spawned; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string describe(const char* type, const std::exception& e) {
    return std::string(type) + ": " + e.what();
}

}  // namespace

Pipeline::Pipeline(Gateway& gateway, RunConfig config)
    : gateway_(gateway), config_(std::move(config)) {}

CompletionRequest Pipeline::request_for(const std::string& prompt) const {
    CompletionRequest req;
    req.model = config_.model;
    req.prompt = prompt;
    req.temperature = config_.temperature;
    req.max_tokens = config_.max_tokens;
    return req;
}

void Pipeline::predict(const Query& query, const std::vector<Demo>& demos,
                       PredictionRecord& record) {
    record.demos = demos;
    const std::string prompt = step3_prompt(config_.task, demos, query.input, config_.mode);
    Completion completion =
        gateway_.cached_complete(request_for(prompt), config_.task.name + "/step3");
    record.steps.push_back({"step3", 0, false, prompt, completion.text, completion.usage});
    try {
        const LabelSpace space = infer_label_space(config_.task, query.input);
        record.answer = extract_answer(space, completion.text);
    } catch (const NoLabelSpace& e) {
        record.failure = describe("NoLabelSpace", e);
    } catch (const UnmatchableLabel& e) {
        record.failure = describe("UnmatchableLabel", e);
    } catch (const NoAnswerFound& e) {
        record.failure = describe("NoAnswerFound", e);
    }
}

std::vector<Demo> Pipeline::label_pseudo_inputs(const std::vector<std::string>& pseudo_inputs,
                                                const std::string& scope_id,
                                                std::vector<StepTrace>& steps) {
    std::vector<Demo> demos;
    demos.reserve(pseudo_inputs.size());
    for (std::size_t i = 0; i < pseudo_inputs.size(); ++i) {
        const std::string& input = pseudo_inputs[i];
        const std::string prompt = step2_prompt(config_.task, input, config_.mode);
        Completion completion =
            gateway_.cached_complete(request_for(prompt), config_.task.name + "/step2");
        steps.push_back({"step2", i, false, prompt, completion.text, completion.usage});
        Demo demo;
        demo.input = input;
        if (config_.mode == Mode::cot) {
            // the trigger plus the generated chain becomes the demo answer
            std::string chain(kCotTrigger);
            if (!completion.text.empty()
                && !std::isspace(static_cast<unsigned char>(completion.text.front()))) {
                chain += ' ';
            }
            chain += completion.text;
            demo.label = trim(chain);
        } else {
            try {
                const LabelSpace space = infer_label_space(config_.task, input);
                demo.label = render_label(space, extract_answer(space, completion.text));
            } catch (const Error&) {
                // a sloppily phrased demo still beats dropping the shot
                demo.label = trim(completion.text);
            }
        }
        demos.push_back(std::move(demo));
    }
    if (config_.shots.random_labels) {
        const std::uint64_t base =
            derive_seed(config_.shots.seed, "random-labels:" + scope_id);
        for (std::size_t i = 0; i < demos.size(); ++i) {
            try {
                const LabelSpace space = infer_label_space(config_.task, demos[i].input);
                const std::size_t pick =
                    static_cast<std::size_t>(splitmix64(base + i) % space.labels.size());
                demos[i].label = render_label(space, space.labels[pick]);
            } catch (const NoLabelSpace&) {
                // nothing to sample from, keep the generated label
            }
        }
    }
    return demos;
}

PredictionRecord Pipeline::run_baseline(const Query& query) {
    PredictionRecord record;
    record.task = config_.task.name;
    record.query_id = query.id;
    record.mode = mode_name(config_.mode);
    record.k = 0;
    predict(query, {}, record);
    return record;
}

PredictionRecord Pipeline::run_query(const Query& query) {
    if (config_.shots.k == 0) return run_baseline(query);

    PredictionRecord record;
    record.task = config_.task.name;
    record.query_id = query.id;
    record.mode = mode_name(config_.mode);
    record.k = config_.shots.k;

    const std::string prompt1 = step1_prompt(config_.task, query.input, config_.shots.k,
                                             config_.shots.diversity_hints);
    const std::string step1_label = config_.task.name + "/step1";
    Completion c1 = gateway_.cached_complete(request_for(prompt1), step1_label);
    record.steps.push_back({"step1", 0, false, prompt1, c1.text, c1.usage});

    std::vector<std::string> pseudo_inputs;
    try {
        pseudo_inputs = parse_pseudo_inputs(c1.text, config_.shots.k);
    } catch (const InsufficientPseudoInputs&) {
        // one fresh attempt; replaying the cached completion would only
        // reproduce the parse failure
        c1 = gateway_.cached_complete(request_for(prompt1), step1_label, CacheUse::refresh);
        record.steps.push_back({"step1", 1, false, prompt1, c1.text, c1.usage});
        try {
            pseudo_inputs = parse_pseudo_inputs(c1.text, config_.shots.k);
        } catch (const InsufficientPseudoInputs& e) {
            record.failure = describe("InsufficientPseudoInputs", e);
            return record;
        }
    }

    std::vector<Demo> demos = label_pseudo_inputs(pseudo_inputs, query.id, record.steps);
    std::vector<Demo> used = std::move(demos);
    if (config_.sample_shots) {
        used = sample_shots(used, *config_.sample_shots,
                            derive_seed(config_.shots.seed, "sample-shots:" + query.id));
    }
    predict(query, used, record);
    return record;
}

std::vector<PredictionRecord> Pipeline::run_window(const std::vector<Query>& window) {
    std::vector<PredictionRecord> records(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        records[i].task = config_.task.name;
        records[i].query_id = window[i].id;
        records[i].mode = mode_name(config_.mode);
        records[i].k = config_.shots.k;
    }

    std::vector<std::string> inputs;
    inputs.reserve(window.size());
    for (const Query& q : window) inputs.push_back(q.input);
    const std::string prompt1 = step1_batch_prompt(config_.task, inputs, config_.shots.k);
    const std::string step1_label = config_.task.name + "/step1";

    std::vector<StepTrace> shared;
    Completion c1 = gateway_.cached_complete(request_for(prompt1), step1_label);
    shared.push_back({"step1", 0, true, prompt1, c1.text, c1.usage});

    std::vector<std::string> pseudo_inputs;
    std::string window_failure;
    try {
        pseudo_inputs = parse_pseudo_inputs(c1.text, config_.shots.k);
    } catch (const InsufficientPseudoInputs&) {
        c1 = gateway_.cached_complete(request_for(prompt1), step1_label, CacheUse::refresh);
        shared.push_back({"step1", 1, true, prompt1, c1.text, c1.usage});
        try {
            pseudo_inputs = parse_pseudo_inputs(c1.text, config_.shots.k);
        } catch (const InsufficientPseudoInputs& e) {
            window_failure = describe("InsufficientPseudoInputs", e);
        }
    }

    for (PredictionRecord& record : records) record.steps = shared;
    if (!window_failure.empty()) {
        for (PredictionRecord& record : records) record.failure = window_failure;
        return records;
    }

    // every query issues its own step2 traffic; identical prompts collapse
    // onto the cache, so the demos come out the same for the whole window
    parallel_for(window.size(), config_.workers, [&](std::size_t i) {
        std::vector<Demo> demos =
            label_pseudo_inputs(pseudo_inputs, window.front().id, records[i].steps);
        if (config_.sample_shots) {
            demos = sample_shots(demos, *config_.sample_shots,
                                 derive_seed(config_.shots.seed, "sample-shots:" + window[i].id));
        }
        predict(window[i], demos, records[i]);
    });
    return records;
}

std::vector<PredictionRecord> Pipeline::run(const std::vector<Query>& queries) {
    if (config_.style == InferenceStyle::batch && config_.shots.k > 0) {
        std::vector<PredictionRecord> records;
        records.reserve(queries.size());
        for (std::size_t start = 0; start < queries.size(); start += config_.batch_size) {
            const std::size_t end = std::min(queries.size(), start + config_.batch_size);
            std::vector<Query> window(queries.begin() + static_cast<std::ptrdiff_t>(start),
                                      queries.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<PredictionRecord> part = run_window(window);
            for (PredictionRecord& r : part) records.push_back(std::move(r));
        }
        return records;
    }
    std::vector<PredictionRecord> records(queries.size());
    parallel_for(queries.size(), config_.workers,
                 [&](std::size_t i) { records[i] = run_query(queries[i]); });
    return records;
}

RunSummary make_run_summary(const RunConfig& config, const std::vector<PredictionRecord>& records,
                            std::size_t issued, const UsageLedger& ledger) {
    RunSummary summary;
    summary.task = config.task.name;
    summary.method = method_label(config);
    summary.mode = mode_name(config.mode);
    summary.style = style_name(config.style);
    summary.model = config.model;
    summary.k = config.shots.k;
    summary.diversity_hints = config.shots.diversity_hints;
    summary.random_labels = config.shots.random_labels;
    summary.sample_shots = config.sample_shots;
    summary.seed = config.shots.seed;
    summary.queries = records.size();
    for (const PredictionRecord& r : records) {
        if (!r.failure.empty()) ++summary.failures;
    }
    summary.issued = issued;
    const std::string prefix = config.task.name + "/";
    for (const auto& [label, totals] : ledger.by_label()) {
        if (starts_with(label, prefix)) summary.usage[label] = totals;
    }
    return summary;
}

}  // namespace selficl
