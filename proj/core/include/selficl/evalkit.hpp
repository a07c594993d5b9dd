#pragma once

#include <string>
#include <vector>

#include "selficl/gateway.hpp"
#include "selficl/pipeline.hpp"
#include "selficl/task.hpp"

namespace selficl {

struct Dataset {
    TaskSpec task;
    std::vector<Query> queries;
    // canonical labels aligned with queries
    std::vector<std::string> targets;
};

// read the JSON examples file referenced by the manifest entry; ids are
// zero padded positions, targets are normalized into each input's label
// space up front so scoring is a plain string comparison
Dataset load_task(const TaskManifestEntry& entry);

struct TaskResult {
    std::string task;
    std::string method;
    std::vector<std::string> ids;       // dataset order
    std::vector<bool> correct_flags;    // aligned with ids
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;  // percent
    std::size_t failures = 0;  // records that carry a failure
    std::size_t missing = 0;   // dataset queries with no record
};

// failed and missing predictions count as incorrect
TaskResult score(const std::vector<PredictionRecord>& records, const Dataset& dataset,
                 const std::string& method);

// unweighted mean of per task accuracies
double macro_average(const std::vector<TaskResult>& results);

// every instance weighted equally: sum(correct) / sum(total); this is what
// the "All Tasks (avg)" row of the report uses
double weighted_average(const std::vector<TaskResult>& results);

struct HeadToHead {
    std::size_t wins = 0;
    std::size_t ties = 0;
    std::size_t losses = 0;
};

// per task accuracy comparison of a versus b; accuracies are rounded to
// two decimals before comparing so printed ties stay ties
HeadToHead head_to_head(const std::vector<TaskResult>& a, const std::vector<TaskResult>& b);

// P(X >= b) for X ~ Binomial(b+c, 1/2); 1.0 when b+c is zero; exact
// integer arithmetic up to n=62, log-gamma above that
double mcnemar_one_sided(std::size_t b, std::size_t c);

struct TaskComparison {
    std::string task;
    double accuracy_a = 0.0;
    double accuracy_b = 0.0;
    std::size_t b = 0;  // a right, b wrong
    std::size_t c = 0;  // a wrong, b right
    double p_value = 1.0;
};

struct MethodComparison {
    std::string method_a;
    std::string method_b;
    std::vector<TaskComparison> tasks;
    HeadToHead h2h;
};

// instance level comparison; both sides must cover the same tasks and ids
MethodComparison compare_methods(const std::vector<TaskResult>& a,
                                 const std::vector<TaskResult>& b);

// report.txt, results.csv, comparisons.csv and costs.csv under out_dir; a
// dagger marks tasks where method_a improves on method_b with p < 0.05
void emit_report(const std::vector<std::vector<TaskResult>>& results_by_method,
                 const std::vector<MethodComparison>& comparisons,
                 const CostReport& costs, const std::string& out_dir);

}  // namespace selficl
