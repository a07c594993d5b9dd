#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selficl/gateway.hpp"
#include "selficl/prompt.hpp"
#include "selficl/task.hpp"

namespace selficl {

struct ShotConfig {
    std::size_t k = 3;
    bool diversity_hints = true;
    bool random_labels = false;
    std::uint64_t seed = 0;
};

enum class InferenceStyle { streaming, batch };

std::string style_name(InferenceStyle style);
InferenceStyle style_from_name(std::string_view name);

struct RunConfig {
    TaskSpec task;
    Mode mode = Mode::direct;
    ShotConfig shots;
    InferenceStyle style = InferenceStyle::streaming;
    std::size_t batch_size = 4;
    // when set, only this many of the generated demos are used in the final
    // prompt, sampled uniformly without replacement
    std::optional<std::size_t> sample_shots;
    std::size_t workers = 1;
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct StepTrace {
    std::string step;  // step1 | step2 | step3
    std::size_t index = 0;  // which pseudo input, for step2
    bool shared = false;    // batch style: the step1 call all queries share
    std::string prompt;
    std::string completion;
    Usage usage;
};

struct PredictionRecord {
    std::string task;
    std::string query_id;
    std::string mode;
    std::size_t k = 0;
    std::vector<StepTrace> steps;
    std::vector<Demo> demos;
    std::string answer;   // canonical label, empty when the query failed
    std::string failure;  // error type and message, empty when it succeeded
};

// label distinguishing run flavors in summaries and reports, e.g.
// "zs-direct", "self-icl-cot", "self-icl-direct+batch+random-labels"
std::string method_label(const RunConfig& config);

// demos drawn without replacement, original order kept; InvalidShotCount
// when more shots are requested than exist
std::vector<Demo> sample_shots(const std::vector<Demo>& demos, std::size_t count,
                               std::uint64_t seed);

struct RunSummary {
    std::string task;
    std::string method;
    std::string mode;
    std::string style;
    std::string model;
    std::size_t k = 0;
    bool diversity_hints = true;
    bool random_labels = false;
    std::optional<std::size_t> sample_shots;
    std::uint64_t seed = 0;
    std::size_t queries = 0;
    std::size_t failures = 0;
    std::size_t issued = 0;  // gateway issue events for this run
    std::map<std::string, UsageTotals> usage;
};

class Pipeline {
public:
    Pipeline(Gateway& gateway, RunConfig config);

    // one query through generate / label / predict; per query problems are
    // recorded on the record, only backend outages propagate
    PredictionRecord run_query(const Query& query);

    // zero-shot prediction, no demos
    PredictionRecord run_baseline(const Query& query);

    // whole run with the configured style; with k=0 every record is exactly
    // the baseline record
    std::vector<PredictionRecord> run(const std::vector<Query>& queries);

    const RunConfig& config() const { return config_; }

private:
    std::vector<PredictionRecord> run_window(const std::vector<Query>& window);
    std::vector<Demo> label_pseudo_inputs(const std::vector<std::string>& pseudo_inputs,
                                          const std::string& scope_id,
                                          std::vector<StepTrace>& steps);
    void predict(const Query& query, const std::vector<Demo>& demos, PredictionRecord& record);
    CompletionRequest request_for(const std::string& prompt) const;

    Gateway& gateway_;
    RunConfig config_;
};

// usage keeps only the ledger labels belonging to this run's task
RunSummary make_run_summary(const RunConfig& config, const std::vector<PredictionRecord>& records,
                            std::size_t issued, const UsageLedger& ledger);

// one pretty printed JSON file per record under <run_dir>/records/, named by
// query id; summaries land in <run_dir>/run_summary.json; nothing written
// here depends on timing or cache state, so reruns are byte identical
std::string record_to_json(const PredictionRecord& record);
PredictionRecord record_from_json(const std::string& text);
void write_records(const std::string& run_dir, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_records(const std::string& run_dir);

std::string run_summary_to_json(const RunSummary& summary);
RunSummary run_summary_from_json(const std::string& text);
void write_run_summary(const std::string& run_dir, const RunSummary& summary);
RunSummary read_run_summary(const std::string& run_dir);

}  // namespace selficl
