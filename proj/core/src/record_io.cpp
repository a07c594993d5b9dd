#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "selficl/errors.hpp"
#include "selficl/pipeline.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

using nlohmann::json;

json usage_to_json(const Usage& usage) {
    json j;
    j["prompt_tokens"] = usage.prompt_tokens;
    j["completion_tokens"] = usage.completion_tokens;
    j["approximate"] = usage.approximate;
    return j;
}

Usage usage_from_json(const json& j) {
    Usage usage;
    usage.prompt_tokens = j.at("prompt_tokens").get<std::size_t>();
    usage.completion_tokens = j.at("completion_tokens").get<std::size_t>();
    usage.approximate = j.at("approximate").get<bool>();
    return usage;
}

}  // namespace

std::string record_to_json(const PredictionRecord& record) {
    json j;
    j["task"] = record.task;
    j["query_id"] = record.query_id;
    j["mode"] = record.mode;
    j["k"] = record.k;
    j["answer"] = record.answer;
    j["failure"] = record.failure;
    j["demos"] = json::array();
    for (const Demo& demo : record.demos) {
        j["demos"].push_back({{"input", demo.input}, {"label", demo.label}});
    }
    j["steps"] = json::array();
    for (const StepTrace& step : record.steps) {
        json s;
        s["step"] = step.step;
        s["index"] = step.index;
        s["shared"] = step.shared;
        s["prompt"] = step.prompt;
        s["completion"] = step.completion;
        s["usage"] = usage_to_json(step.usage);
        j["steps"].push_back(std::move(s));
    }
    return j.dump(2) + "\n";
}

PredictionRecord record_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("record is not valid JSON: ") + e.what());
    }
    PredictionRecord record;
    try {
        record.task = j.at("task").get<std::string>();
        record.query_id = j.at("query_id").get<std::string>();
        record.mode = j.at("mode").get<std::string>();
        record.k = j.at("k").get<std::size_t>();
        record.answer = j.at("answer").get<std::string>();
        record.failure = j.at("failure").get<std::string>();
        for (const json& d : j.at("demos")) {
            record.demos.push_back({d.at("input").get<std::string>(),
                                    d.at("label").get<std::string>()});
        }
        for (const json& s : j.at("steps")) {
            StepTrace step;
            step.step = s.at("step").get<std::string>();
            step.index = s.at("index").get<std::size_t>();
            step.shared = s.at("shared").get<bool>();
            step.prompt = s.at("prompt").get<std::string>();
            step.completion = s.at("completion").get<std::string>();
            step.usage = usage_from_json(s.at("usage"));
            record.steps.push_back(std::move(step));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("record is missing fields: ") + e.what());
    }
    return record;
}

void write_records(const std::string& run_dir, const std::vector<PredictionRecord>& records) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(run_dir) / "records";
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw OutputUnwritable("cannot create " + dir.string() + ": " + ec.message());
    for (const PredictionRecord& record : records) {
        atomic_write_file((dir / (record.query_id + ".json")).string(), record_to_json(record));
    }
}

std::vector<PredictionRecord> read_records(const std::string& run_dir) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path(run_dir) / "records";
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error("no records directory under " + run_dir);
    std::vector<fs::path> files;
    for (const auto& de : fs::directory_iterator(dir)) {
        if (de.path().extension() == ".json") files.push_back(de.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<PredictionRecord> records;
    records.reserve(files.size());
    for (const fs::path& f : files) records.push_back(record_from_json(read_file(f.string())));
    return records;
}

std::string run_summary_to_json(const RunSummary& summary) {
    json j;
    j["task"] = summary.task;
    j["method"] = summary.method;
    j["mode"] = summary.mode;
    j["style"] = summary.style;
    j["model"] = summary.model;
    j["k"] = summary.k;
    j["diversity_hints"] = summary.diversity_hints;
    j["random_labels"] = summary.random_labels;
    if (summary.sample_shots) {
        j["sample_shots"] = *summary.sample_shots;
    } else {
        j["sample_shots"] = nullptr;
    }
    j["seed"] = summary.seed;
    j["queries"] = summary.queries;
    j["failures"] = summary.failures;
    j["issued"] = summary.issued;
    j["usage"] = json::object();
    for (const auto& [label, t] : summary.usage) {
        j["usage"][label] = {{"calls", t.calls},
                             {"prompt_tokens", t.prompt_tokens},
                             {"completion_tokens", t.completion_tokens},
                             {"approximate", t.approximate}};
    }
    return j.dump(2) + "\n";
}

RunSummary run_summary_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("run summary is not valid JSON: ") + e.what());
    }
    RunSummary summary;
    try {
        summary.task = j.at("task").get<std::string>();
        summary.method = j.at("method").get<std::string>();
        summary.mode = j.at("mode").get<std::string>();
        summary.style = j.at("style").get<std::string>();
        summary.model = j.at("model").get<std::string>();
        summary.k = j.at("k").get<std::size_t>();
        summary.diversity_hints = j.at("diversity_hints").get<bool>();
        summary.random_labels = j.at("random_labels").get<bool>();
        if (!j.at("sample_shots").is_null()) {
            summary.sample_shots = j.at("sample_shots").get<std::size_t>();
        }
        summary.seed = j.at("seed").get<std::uint64_t>();
        summary.queries = j.at("queries").get<std::size_t>();
        summary.failures = j.at("failures").get<std::size_t>();
        summary.issued = j.at("issued").get<std::size_t>();
        for (const auto& [label, t] : j.at("usage").items()) {
            UsageTotals totals;
            totals.calls = t.at("calls").get<std::size_t>();
            totals.prompt_tokens = t.at("prompt_tokens").get<std::size_t>();
            totals.completion_tokens = t.at("completion_tokens").get<std::size_t>();
            totals.approximate = t.at("approximate").get<bool>();
            summary.usage[label] = totals;
        }
    } catch (const json::exception& e) {
        throw Error(std::string("run summary is missing fields: ") + e.what());
    }
    return summary;
}

void write_run_summary(const std::string& run_dir, const RunSummary& summary) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw OutputUnwritable("cannot create " + run_dir + ": " + ec.message());
    atomic_write_file((fs::path(run_dir) / "run_summary.json").string(),
                      run_summary_to_json(summary));
}

RunSummary read_run_summary(const std::string& run_dir) {
    namespace fs = std::filesystem;
    return run_summary_from_json(read_file((fs::path(run_dir) / "run_summary.json").string()));
}

}  // namespace selficl
