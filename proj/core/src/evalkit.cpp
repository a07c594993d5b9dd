#include "selficl/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "selficl/errors.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

using nlohmann::json;

// accuracy as it appears in print: percent, two decimals
long long rounded_centi_pct(double accuracy) {
    return std::llround(accuracy * 100.0);
}

}  // namespace

Dataset load_task(const TaskManifestEntry& entry) {
    std::string raw;
    try {
        raw = read_file(entry.data_path);
    } catch (const Error& e) {
        throw MalformedDataset(entry.task.name + ": " + e.what());
    }
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::exception& e) {
        throw MalformedDataset(entry.task.name + ": " + entry.data_path
                               + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("examples") || !j["examples"].is_array()) {
        throw MalformedDataset(entry.task.name + ": " + entry.data_path
                               + " must be an object with an 'examples' array");
    }
    Dataset dataset;
    dataset.task = entry.task;
    const json& examples = j["examples"];
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const json& ex = examples[i];
        if (!ex.is_object() || !ex.contains("input") || !ex["input"].is_string()
            || !ex.contains("target") || !ex["target"].is_string()) {
            throw MalformedDataset(entry.task.name + ": example " + std::to_string(i)
                                   + " needs string fields 'input' and 'target'");
        }
        char id[16];
        std::snprintf(id, sizeof(id), "%04zu", i);
        Query query{id, trim(ex["input"].get<std::string>())};
        const std::string raw_target = ex["target"].get<std::string>();
        std::string target;
        try {
            const LabelSpace space = infer_label_space(entry.task, query.input);
            target = normalize_label(space, raw_target);
        } catch (const Error& e) {
            throw TargetOutsideLabelSpace(entry.task.name + ": example " + std::to_string(i)
                                          + ": target '" + raw_target + "': " + e.what());
        }
        dataset.queries.push_back(std::move(query));
        dataset.targets.push_back(std::move(target));
    }
    if (entry.expected_examples > 0 && dataset.queries.size() != entry.expected_examples) {
        throw MalformedDataset(entry.task.name + ": expected "
                               + std::to_string(entry.expected_examples) + " examples, found "
                               + std::to_string(dataset.queries.size()));
    }
    return dataset;
}

TaskResult score(const std::vector<PredictionRecord>& records, const Dataset& dataset,
                 const std::string& method) {
    if (dataset.queries.empty()) {
        throw EmptyList("dataset for task '" + dataset.task.name + "' has no queries");
    }
    std::map<std::string, const PredictionRecord*> by_id;
    for (const PredictionRecord& r : records) {
        if (!by_id.emplace(r.query_id, &r).second) {
            throw DuplicateQueryId("task '" + dataset.task.name + "' has two records for query '"
                                   + r.query_id + "'");
        }
    }
    TaskResult result;
    result.task = dataset.task.name;
    result.method = method;
    result.total = dataset.queries.size();
    for (std::size_t i = 0; i < dataset.queries.size(); ++i) {
        const std::string& id = dataset.queries[i].id;
        result.ids.push_back(id);
        bool correct = false;
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            ++result.missing;
        } else {
            const PredictionRecord& r = *it->second;
            if (!r.failure.empty()) {
                ++result.failures;
            } else {
                correct = r.answer == dataset.targets[i];
            }
        }
        result.correct_flags.push_back(correct);
        if (correct) ++result.correct;
    }
    result.accuracy = 100.0 * static_cast<double>(result.correct)
                      / static_cast<double>(result.total);
    return result;
}

double macro_average(const std::vector<TaskResult>& results) {
    if (results.empty()) throw EmptyList("macro_average over no task results");
    double sum = 0.0;
    for (const TaskResult& r : results) sum += r.accuracy;
    return sum / static_cast<double>(results.size());
}

double weighted_average(const std::vector<TaskResult>& results) {
    if (results.empty()) throw EmptyList("weighted_average over no task results");
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const TaskResult& r : results) {
        correct += r.correct;
        total += r.total;
    }
    if (total == 0) throw EmptyList("weighted_average over empty tasks");
    return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

namespace {

std::map<std::string, const TaskResult*> index_by_task(const std::vector<TaskResult>& results,
                                                       const char* side) {
    std::map<std::string, const TaskResult*> out;
    for (const TaskResult& r : results) {
        if (!out.emplace(r.task, &r).second) {
            throw TaskSetMismatch(std::string(side) + " lists task '" + r.task + "' twice");
        }
    }
    return out;
}

void require_same_tasks(const std::map<std::string, const TaskResult*>& a,
                        const std::map<std::string, const TaskResult*>& b) {
    if (a.size() != b.size()) {
        throw TaskSetMismatch("comparing " + std::to_string(a.size()) + " tasks against "
                              + std::to_string(b.size()));
    }
    for (const auto& [task, r] : a) {
        if (!b.count(task)) throw TaskSetMismatch("task '" + task + "' is missing on one side");
    }
}

}  // namespace

HeadToHead head_to_head(const std::vector<TaskResult>& a, const std::vector<TaskResult>& b) {
    auto ia = index_by_task(a, "left side");
    auto ib = index_by_task(b, "right side");
    require_same_tasks(ia, ib);
    HeadToHead h2h;
    for (const auto& [task, ra] : ia) {
        const TaskResult* rb = ib.at(task);
        const long long ca = rounded_centi_pct(ra->accuracy);
        const long long cb = rounded_centi_pct(rb->accuracy);
        if (ca > cb) {
            ++h2h.wins;
        } else if (ca < cb) {
            ++h2h.losses;
        } else {
            ++h2h.ties;
        }
    }
    return h2h;
}

double mcnemar_one_sided(std::size_t b, std::size_t c) {
    const std::size_t n = b + c;
    if (n == 0) return 1.0;
    if (n <= 62) {
        // C(62, i) sums stay inside 64 bits, so this path is exact
        std::uint64_t binom = 1;  // C(n, 0)
        std::uint64_t tail = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (i >= b) tail += binom;
            // widen the multiply, C(62,31)*31 grazes the top of uint64
            binom = static_cast<std::uint64_t>(
                static_cast<unsigned __int128>(binom) * (n - i) / (i + 1));
        }
        return static_cast<double>(static_cast<long double>(tail)
                                   / std::pow(2.0L, static_cast<long double>(n)));
    }
    long double log_half_n = static_cast<long double>(n) * std::log(0.5L);
    long double p = 0.0L;
    for (std::size_t i = b; i <= n; ++i) {
        long double log_binom = std::lgamma(static_cast<long double>(n) + 1.0L)
                                - std::lgamma(static_cast<long double>(i) + 1.0L)
                                - std::lgamma(static_cast<long double>(n - i) + 1.0L);
        p += std::exp(log_binom + log_half_n);
    }
    return static_cast<double>(std::min(p, 1.0L));
}

MethodComparison compare_methods(const std::vector<TaskResult>& a,
                                 const std::vector<TaskResult>& b) {
    if (a.empty() || b.empty()) throw EmptyList("compare_methods needs results on both sides");
    auto ia = index_by_task(a, "left side");
    auto ib = index_by_task(b, "right side");
    require_same_tasks(ia, ib);
    MethodComparison cmp;
    cmp.method_a = a.front().method;
    cmp.method_b = b.front().method;
    for (const auto& [task, ra] : ia) {
        const TaskResult* rb = ib.at(task);
        if (ra->ids != rb->ids) {
            throw TaskSetMismatch("task '" + task + "' scored over different query ids");
        }
        TaskComparison tc;
        tc.task = task;
        tc.accuracy_a = ra->accuracy;
        tc.accuracy_b = rb->accuracy;
        for (std::size_t i = 0; i < ra->ids.size(); ++i) {
            const bool ca = ra->correct_flags[i];
            const bool cb = rb->correct_flags[i];
            if (ca && !cb) ++tc.b;
            if (!ca && cb) ++tc.c;
        }
        tc.p_value = mcnemar_one_sided(tc.b, tc.c);
        cmp.tasks.push_back(std::move(tc));
    }
    cmp.h2h = head_to_head(a, b);
    return cmp;
}

}  // namespace selficl
