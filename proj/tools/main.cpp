// selficl: run the self-generated demonstration pipeline and its evaluation
// over a task manifest, driven by one JSON config document.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "selficl/analysis.hpp"
#include "selficl/config.hpp"
#include "selficl/errors.hpp"
#include "selficl/evalkit.hpp"
#include "selficl/extraction.hpp"
#include "selficl/gateway.hpp"
#include "selficl/pipeline.hpp"
#include "selficl/util.hpp"

namespace fs = std::filesystem;
using namespace selficl;

namespace {

struct CliOverrides {
    std::optional<std::string> task;
    std::optional<std::string> mode;
    std::optional<std::size_t> k;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> backend;
    std::optional<std::size_t> workers;
    std::optional<std::string> style;
};

RunDocument load_config(const std::string& path, const CliOverrides& cli) {
    RunDocument doc = load_run_document(path);
    if (cli.task) doc.task = *cli.task;
    if (cli.mode) doc.mode = *cli.mode;
    if (cli.k) doc.shots.k = *cli.k;
    if (cli.seed) doc.shots.seed = *cli.seed;
    if (cli.out) doc.out = *cli.out;
    if (cli.backend) doc.backend.kind = *cli.backend;
    if (cli.workers) doc.workers = *cli.workers;
    if (cli.style) doc.style = *cli.style;
    mode_from_name(doc.mode);
    style_from_name(doc.style);
    if (doc.backend.kind != "mock" && doc.backend.kind != "http") {
        throw ConfigError("backend must be mock or http, got '" + doc.backend.kind + "'");
    }
    if (doc.backend.kind == "http" && doc.backend.endpoint.empty()) {
        throw ConfigError("http backend needs backend.endpoint in the config");
    }
    if (doc.sample_shots && *doc.sample_shots > doc.shots.k) {
        throw ConfigError("sample_shots cannot exceed shots.k");
    }
    return doc;
}

std::shared_ptr<Backend> build_backend(const RunDocument& doc) {
    if (doc.backend.kind == "mock") {
        auto mock = std::make_shared<MockBackend>(doc.backend.fallback);
        if (!doc.backend.fixtures.empty()) mock->load_fixtures(doc.backend.fixtures);
        return mock;
    }
    HttpBackendConfig http;
    http.endpoint = doc.backend.endpoint;
    http.api_key_env = doc.backend.api_key_env;
    http.max_retries = doc.backend.max_retries;
    http.timeout_ms = doc.backend.timeout_ms;
    http.backoff_base_ms = doc.backend.backoff_base_ms;
    return std::make_shared<HttpBackend>(http);
}

std::vector<TaskManifestEntry> manifest_for(const RunDocument& doc) {
    std::vector<TaskManifestEntry> entries = load_task_manifest(doc.manifest);
    if (!doc.task.empty()) {
        std::vector<TaskManifestEntry> filtered;
        for (TaskManifestEntry& e : entries) {
            if (e.task.name == doc.task) filtered.push_back(std::move(e));
        }
        if (filtered.empty()) {
            throw ConfigError("task '" + doc.task + "' is not in manifest " + doc.manifest);
        }
        entries = std::move(filtered);
    }
    return entries;
}

RunConfig run_config_for(const RunDocument& doc, const TaskSpec& task) {
    RunConfig rc;
    rc.task = task;
    rc.mode = mode_from_name(doc.mode);
    rc.shots = doc.shots;
    rc.style = style_from_name(doc.style);
    rc.batch_size = doc.batch_size;
    rc.sample_shots = doc.sample_shots;
    rc.workers = doc.workers;
    rc.model = doc.backend.model;
    rc.temperature = doc.backend.temperature;
    rc.max_tokens = doc.backend.max_tokens;
    return rc;
}

int cmd_run(const std::string& config_path, const CliOverrides& cli) {
    RunDocument doc = load_config(config_path, cli);
    std::vector<TaskManifestEntry> entries = manifest_for(doc);

    // load every dataset before the first byte of output is written
    std::vector<Dataset> datasets;
    datasets.reserve(entries.size());
    for (const TaskManifestEntry& entry : entries) datasets.push_back(load_task(entry));

    std::shared_ptr<CacheStore> cache;
    if (!doc.cache.empty()) cache = std::make_shared<CacheStore>(doc.cache);
    Gateway gateway(build_backend(doc), cache, doc.backend.pricing);

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const RunConfig rc = run_config_for(doc, entries[i].task);
        Pipeline pipeline(gateway, rc);
        const std::size_t issued_before = gateway.issued();
        const std::size_t backend_before = gateway.backend_calls();
        const std::size_t hits_before = gateway.cache_hits();
        const std::vector<PredictionRecord> records = pipeline.run(datasets[i].queries);
        const std::size_t issued = gateway.issued() - issued_before;

        const RunSummary summary =
            make_run_summary(rc, records, issued, gateway.ledger_snapshot());
        const std::string run_dir =
            (fs::path(doc.out) / rc.task.name / summary.method).string();
        write_records(run_dir, records);
        write_run_summary(run_dir, summary);

        std::cout << rc.task.name << " [" << summary.method << "]: " << summary.queries
                  << " queries, " << summary.failures << " failures, " << issued
                  << " completions issued (" << (gateway.backend_calls() - backend_before)
                  << " backend calls, " << (gateway.cache_hits() - hits_before)
                  << " cache hits) -> " << run_dir << "\n";
    }

    const CostReport costs = gateway.cost_report();
    if (costs.total > 0.0) {
        std::cout << "estimated cost: $" << format_currency(costs.total) << "\n";
    }
    return 0;
}

struct RunRef {
    std::string task;
    std::string method;
    std::string dir;
};

std::vector<RunRef> discover_runs(const std::string& out) {
    std::vector<RunRef> runs;
    std::error_code ec;
    if (!fs::is_directory(out, ec)) throw Error("no run output under " + out);
    std::vector<fs::path> task_dirs;
    for (const auto& de : fs::directory_iterator(out)) {
        if (de.is_directory()) task_dirs.push_back(de.path());
    }
    std::sort(task_dirs.begin(), task_dirs.end());
    for (const fs::path& task_dir : task_dirs) {
        std::vector<fs::path> method_dirs;
        for (const auto& de : fs::directory_iterator(task_dir)) {
            if (de.is_directory() && fs::exists(de.path() / "run_summary.json")) {
                method_dirs.push_back(de.path());
            }
        }
        std::sort(method_dirs.begin(), method_dirs.end());
        for (const fs::path& method_dir : method_dirs) {
            runs.push_back({task_dir.filename().string(), method_dir.filename().string(),
                            method_dir.string()});
        }
    }
    if (runs.empty()) throw Error("no finished runs under " + out);
    return runs;
}

std::map<std::string, Dataset> datasets_by_task(const RunDocument& doc,
                                                const std::vector<RunRef>& runs) {
    std::vector<TaskManifestEntry> entries = load_task_manifest(doc.manifest);
    std::map<std::string, const TaskManifestEntry*> by_name;
    for (const TaskManifestEntry& e : entries) by_name[e.task.name] = &e;
    std::map<std::string, Dataset> datasets;
    for (const RunRef& run : runs) {
        if (datasets.count(run.task)) continue;
        auto it = by_name.find(run.task);
        if (it == by_name.end()) {
            throw ConfigError("run output has task '" + run.task
                              + "' that is not in the manifest");
        }
        datasets.emplace(run.task, load_task(*it->second));
    }
    return datasets;
}

// method -> per task results, methods in first-seen order
std::pair<std::vector<std::string>, std::map<std::string, std::vector<TaskResult>>>
score_runs(const std::vector<RunRef>& runs, const std::map<std::string, Dataset>& datasets) {
    std::vector<std::string> method_order;
    std::map<std::string, std::vector<TaskResult>> by_method;
    for (const RunRef& run : runs) {
        const std::vector<PredictionRecord> records = read_records(run.dir);
        TaskResult result = score(records, datasets.at(run.task), run.method);
        if (!by_method.count(run.method)) method_order.push_back(run.method);
        by_method[run.method].push_back(std::move(result));
    }
    return {method_order, by_method};
}

int cmd_eval(const std::string& config_path, const CliOverrides& cli) {
    RunDocument doc = load_config(config_path, cli);
    const std::vector<RunRef> runs = discover_runs(doc.out);
    const auto datasets = datasets_by_task(doc, runs);
    auto [method_order, by_method] = score_runs(runs, datasets);

    std::ostringstream csv;
    csv << "method,task,correct,total,accuracy,failures,missing\n";
    for (const std::string& method : method_order) {
        for (const TaskResult& r : by_method[method]) {
            csv << method << ',' << r.task << ',' << r.correct << ',' << r.total << ','
                << format_pct(r.accuracy) << ',' << r.failures << ',' << r.missing << '\n';
            std::cout << r.task << " [" << method << "]: " << format_pct(r.accuracy) << "% ("
                      << r.correct << "/" << r.total << ")";
            if (r.failures || r.missing) {
                std::cout << ", " << r.failures << " failures, " << r.missing << " missing";
            }
            std::cout << "\n";
        }
        std::cout << "all tasks [" << method << "]: "
                  << format_pct(weighted_average(by_method[method])) << "%\n";
    }
    atomic_write_file((fs::path(doc.out) / "results.csv").string(), csv.str());
    return 0;
}

int cmd_compare(const std::string& config_path, const CliOverrides& cli, const std::string& a,
                const std::string& b) {
    RunDocument doc = load_config(config_path, cli);
    std::vector<RunRef> runs = discover_runs(doc.out);
    std::vector<RunRef> wanted;
    for (const RunRef& run : runs) {
        if (run.method == a || run.method == b) wanted.push_back(run);
    }
    if (wanted.empty()) throw Error("neither method has runs under " + doc.out);
    const auto datasets = datasets_by_task(doc, wanted);
    auto scored = score_runs(wanted, datasets);
    auto& by_method = scored.second;
    if (!by_method.count(a)) throw Error("no runs for method '" + a + "' under " + doc.out);
    if (!by_method.count(b)) throw Error("no runs for method '" + b + "' under " + doc.out);

    // restrict both sides to the tasks they share
    std::map<std::string, const TaskResult*> tasks_b;
    for (const TaskResult& r : by_method[b]) tasks_b[r.task] = &r;
    std::vector<TaskResult> side_a, side_b;
    for (const TaskResult& r : by_method[a]) {
        auto it = tasks_b.find(r.task);
        if (it != tasks_b.end()) {
            side_a.push_back(r);
            side_b.push_back(*it->second);
        }
    }
    if (side_a.empty()) throw Error("methods '" + a + "' and '" + b + "' share no tasks");

    const MethodComparison cmp = compare_methods(side_a, side_b);
    std::ostringstream csv;
    csv << "method_a,method_b,task,accuracy_a,accuracy_b,b,c,p_value,significant\n";
    for (const TaskComparison& tc : cmp.tasks) {
        char pbuf[32];
        std::snprintf(pbuf, sizeof(pbuf), "%.6f", tc.p_value);
        std::cout << tc.task << ": " << format_pct(tc.accuracy_a) << " vs "
                  << format_pct(tc.accuracy_b) << " (b=" << tc.b << ", c=" << tc.c
                  << ", p=" << pbuf << (tc.p_value < 0.05 ? ", significant" : "") << ")\n";
        csv << cmp.method_a << ',' << cmp.method_b << ',' << tc.task << ','
            << format_pct(tc.accuracy_a) << ',' << format_pct(tc.accuracy_b) << ',' << tc.b << ','
            << tc.c << ',' << pbuf << ',' << (tc.p_value < 0.05 ? 1 : 0) << '\n';
    }
    std::cout << "head-to-head (win-tie-lose): " << cmp.h2h.wins << '-' << cmp.h2h.ties << '-'
              << cmp.h2h.losses << "\n";
    atomic_write_file((fs::path(doc.out) / "comparisons.csv").string(), csv.str());
    return 0;
}

// matched baseline for a self-icl method, e.g. self-icl-cot+batch -> zs-cot
std::string baseline_for(const std::string& method) {
    if (starts_with(method, "self-icl-direct")) return "zs-direct";
    if (starts_with(method, "self-icl-cot")) return "zs-cot";
    return {};
}

int cmd_report(const std::string& config_path, const CliOverrides& cli) {
    RunDocument doc = load_config(config_path, cli);
    const std::vector<RunRef> runs = discover_runs(doc.out);
    const auto datasets = datasets_by_task(doc, runs);
    auto [method_order, by_method] = score_runs(runs, datasets);

    std::vector<std::vector<TaskResult>> results_by_method;
    for (const std::string& method : method_order) {
        results_by_method.push_back(by_method[method]);
    }

    std::vector<MethodComparison> comparisons;
    for (const std::string& method : method_order) {
        const std::string baseline = baseline_for(method);
        if (baseline.empty() || !by_method.count(baseline)) continue;
        std::map<std::string, const TaskResult*> base_tasks;
        for (const TaskResult& r : by_method[baseline]) base_tasks[r.task] = &r;
        std::vector<TaskResult> side_a, side_b;
        for (const TaskResult& r : by_method[method]) {
            auto it = base_tasks.find(r.task);
            if (it != base_tasks.end()) {
                side_a.push_back(r);
                side_b.push_back(*it->second);
            }
        }
        if (!side_a.empty()) comparisons.push_back(compare_methods(side_a, side_b));
    }

    // costs replayed from the run summaries, labelled method/task/step
    UsageLedger ledger;
    for (const RunRef& run : runs) {
        const RunSummary summary = read_run_summary(run.dir);
        for (const auto& [label, totals] : summary.usage) {
            ledger.add_totals(run.method + "/" + label, totals);
        }
    }
    const CostReport costs = estimate_cost(ledger, doc.backend.pricing);

    emit_report(results_by_method, comparisons, costs, doc.out);
    std::cout << "wrote " << (fs::path(doc.out) / "report.txt").string()
              << " and results/comparisons/costs csv files\n";
    return 0;
}

int cmd_analyze(const std::string& config_path, const CliOverrides& cli,
                const std::string& method_flag) {
    RunDocument doc = load_config(config_path, cli);
    const std::vector<RunRef> runs = discover_runs(doc.out);

    std::string method = method_flag;
    if (method.empty()) {
        std::vector<std::string> candidates;
        for (const RunRef& run : runs) {
            if (starts_with(run.method, "self-icl")
                && std::find(candidates.begin(), candidates.end(), run.method)
                       == candidates.end()) {
                candidates.push_back(run.method);
            }
        }
        if (candidates.empty()) throw Error("no self-icl runs under " + doc.out);
        if (candidates.size() > 1) {
            std::string list;
            for (const std::string& c : candidates) list += " " + c;
            throw Error("several self-icl methods found, pick one with --method:" + list);
        }
        method = candidates.front();
    }

    std::vector<RunRef> wanted;
    for (const RunRef& run : runs) {
        if (run.method == method) wanted.push_back(run);
    }
    if (wanted.empty()) throw Error("no runs for method '" + method + "' under " + doc.out);
    const auto datasets = datasets_by_task(doc, wanted);

    std::unique_ptr<EmbeddingProvider> provider;
    if (doc.analysis.provider == "hashed") {
        provider = std::make_unique<HashedEmbeddingProvider>(doc.analysis.dimension);
    } else {
        HttpEmbeddingConfig cfg;
        cfg.endpoint = doc.analysis.endpoint;
        cfg.model = doc.analysis.model;
        cfg.api_key_env = doc.analysis.api_key_env;
        provider = std::make_unique<HttpEmbeddingProvider>(cfg);
    }

    std::vector<GapReport> reports;
    for (const RunRef& run : wanted) {
        const std::vector<PredictionRecord> records = read_records(run.dir);
        GapReport report = analyze_run(*provider, datasets.at(run.task), records,
                                       doc.analysis.seeds, doc.shots.seed);
        std::cout << report.task << ": gap " << format_fixed(report.gap_mean, 4) << " +- "
                  << format_fixed(report.gap_std, 4)
                  << (report.in_band ? " (within +-0.05)" : " (outside +-0.05)") << "\n";
        reports.push_back(std::move(report));
    }
    write_analysis(reports, doc.out);
    std::cout << "wrote " << (fs::path(doc.out) / "analysis.csv").string() << " and chart.txt\n";
    return 0;
}

int cmd_cache(const std::string& config_path, const std::string& cache_flag, bool purge) {
    std::string path = cache_flag;
    if (path.empty()) {
        RunDocument doc = load_run_document(config_path);
        path = doc.cache;
    }
    if (path.empty()) throw ConfigError("no cache path: pass --cache or set it in the config");
    CacheStore store(path);
    if (purge) {
        store.purge();
        std::cout << "purged " << path << "\n";
    } else {
        const CacheStats stats = store.stats();
        std::cout << path << ": " << stats.records << " records";
        if (stats.corrupt_skipped) std::cout << ", " << stats.corrupt_skipped << " skipped";
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-generated demonstrations for zero-shot in-context learning"};
    app.require_subcommand(1);

    std::string config_path = "selficl.json";
    app.add_option("--config", config_path, "run configuration JSON")->capture_default_str();

    CliOverrides cli;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--task", cli.task, "run only this manifest task");
        sub->add_option("--mode", cli.mode, "direct or cot");
        sub->add_option("--k", cli.k, "number of generated demonstrations, 0 for the baseline");
        sub->add_option("--seed", cli.seed, "seed for sampling decisions");
        sub->add_option("--out", cli.out, "output directory");
        sub->add_option("--backend", cli.backend, "mock or http");
        sub->add_option("--workers", cli.workers, "parallel queries");
        sub->add_option("--style", cli.style, "streaming or batch");
    };

    CLI::App* run = app.add_subcommand("run", "run the pipeline over the manifest tasks");
    add_common(run);
    CLI::App* eval = app.add_subcommand("eval", "score finished runs against the datasets");
    add_common(eval);
    CLI::App* compare = app.add_subcommand("compare", "instance level comparison of two methods");
    add_common(compare);
    std::string method_a, method_b;
    compare->add_option("--a", method_a, "candidate method label")->required();
    compare->add_option("--b", method_b, "baseline method label")->required();
    CLI::App* report = app.add_subcommand("report", "write the full report and csv files");
    add_common(report);
    CLI::App* analyze =
        app.add_subcommand("analyze", "similarity gap between generated and real inputs");
    add_common(analyze);
    std::string analyze_method;
    analyze->add_option("--method", analyze_method, "method label to analyze");
    CLI::App* cache = app.add_subcommand("cache", "inspect or clear the completion cache");
    std::string cache_path;
    cache->add_option("--cache", cache_path, "cache file path");
    cache->require_subcommand(1);
    cache->add_subcommand("stats", "record counts");
    CLI::App* cache_purge = cache->add_subcommand("purge", "drop every cached completion");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) return cmd_run(config_path, cli);
        if (app.got_subcommand(eval)) return cmd_eval(config_path, cli);
        if (app.got_subcommand(compare)) return cmd_compare(config_path, cli, method_a, method_b);
        if (app.got_subcommand(report)) return cmd_report(config_path, cli);
        if (app.got_subcommand(analyze)) return cmd_analyze(config_path, cli, analyze_method);
        if (app.got_subcommand(cache)) {
            return cmd_cache(config_path, cache_path, cache->got_subcommand(cache_purge));
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const MalformedDataset& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const TargetOutsideLabelSpace& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const BackendUnavailable& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
