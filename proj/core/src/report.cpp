#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "selficl/errors.hpp"
#include "selficl/evalkit.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

std::string pad_left(const std::string& s, std::size_t width) {
    if (s.size() >= width) return s;
    return std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    if (s.size() >= width) return s;
    return s + std::string(width - s.size(), ' ');
}

std::string format_p(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", p);
    return buf;
}

}  // namespace

void emit_report(const std::vector<std::vector<TaskResult>>& results_by_method,
                 const std::vector<MethodComparison>& comparisons,
                 const CostReport& costs, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw OutputUnwritable("cannot create " + out_dir + ": " + ec.message());

    // (task, method) cells marked significant
    std::set<std::pair<std::string, std::string>> daggered;
    for (const MethodComparison& cmp : comparisons) {
        for (const TaskComparison& tc : cmp.tasks) {
            if (tc.p_value < 0.05) daggered.insert({tc.task, cmp.method_a});
        }
    }

    std::vector<std::string> methods;
    std::set<std::string> task_names;
    std::map<std::string, std::map<std::string, const TaskResult*>> cell;  // task -> method -> result
    for (const auto& results : results_by_method) {
        if (results.empty()) continue;
        methods.push_back(results.front().method);
        for (const TaskResult& r : results) {
            task_names.insert(r.task);
            cell[r.task][r.method] = &r;
        }
    }

    std::ostringstream report;
    report << "Accuracy by task (percent)\n\n";
    const std::string avg_label = "All Tasks (avg)";
    std::size_t task_width = avg_label.size();
    for (const std::string& t : task_names) task_width = std::max(task_width, t.size());
    report << pad_right("Task", task_width);
    std::vector<std::size_t> widths;
    for (const std::string& m : methods) {
        widths.push_back(std::max<std::size_t>(m.size(), 9));
        report << "  " << pad_left(m, widths.back());
    }
    report << '\n';
    std::size_t rule = task_width;
    for (std::size_t w : widths) rule += 2 + w;
    report << std::string(rule, '-') << '\n';
    for (const std::string& t : task_names) {
        report << pad_right(t, task_width);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            std::string value = "-";
            auto mit = cell[t].find(methods[mi]);
            if (mit != cell[t].end()) {
                value = format_pct(mit->second->accuracy);
                if (daggered.count({t, methods[mi]})) value += "\xe2\x80\xa0";  // dagger
            }
            report << "  " << pad_left(value, widths[mi]);
        }
        report << '\n';
    }
    report << pad_right(avg_label, task_width);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::string value = "-";
        if (!results_by_method[mi].empty()) {
            value = format_pct(weighted_average(results_by_method[mi]));
        }
        report << "  " << pad_left(value, widths[mi]);
    }
    report << '\n';

    if (!comparisons.empty()) {
        report << "\nHead-to-head (win-tie-lose)\n\n";
        for (const MethodComparison& cmp : comparisons) {
            report << cmp.method_a << " vs " << cmp.method_b << ": " << cmp.h2h.wins << '-'
                   << cmp.h2h.ties << '-' << cmp.h2h.losses << '\n';
        }
        report << "\nSignificance (one-sided McNemar, " "\xe2\x80\xa0" " marks p < 0.05)\n\n";
        for (const MethodComparison& cmp : comparisons) {
            report << cmp.method_a << " vs " << cmp.method_b << '\n';
            for (const TaskComparison& tc : cmp.tasks) {
                report << "  " << pad_right(tc.task, task_width) << "  b=" << tc.b
                       << " c=" << tc.c << " p=" << format_p(tc.p_value)
                       << (tc.p_value < 0.05 ? " \xe2\x80\xa0" : "") << '\n';
            }
        }
    }

    if (!costs.lines.empty()) {
        report << "\nEstimated cost (USD)\n\n";
        for (const CostLine& line : costs.lines) {
            report << "  " << pad_right(line.label, task_width) << "  "
                   << pad_left(format_currency(line.cost), 10)
                   << (line.approximate ? "  (approximate tokens)" : "") << '\n';
        }
        report << "  " << pad_right("total", task_width) << "  "
               << pad_left(format_currency(costs.total), 10) << '\n';
    }

    atomic_write_file((fs::path(out_dir) / "report.txt").string(), report.str());

    std::ostringstream results_csv;
    results_csv << "method,task,correct,total,accuracy,failures,missing\n";
    for (const auto& results : results_by_method) {
        std::vector<const TaskResult*> sorted;
        for (const TaskResult& r : results) sorted.push_back(&r);
        std::sort(sorted.begin(), sorted.end(),
                  [](const TaskResult* x, const TaskResult* y) { return x->task < y->task; });
        for (const TaskResult* r : sorted) {
            results_csv << csv_field(r->method) << ',' << csv_field(r->task) << ',' << r->correct
                        << ',' << r->total << ',' << format_pct(r->accuracy) << ',' << r->failures
                        << ',' << r->missing << '\n';
        }
    }
    atomic_write_file((fs::path(out_dir) / "results.csv").string(), results_csv.str());

    std::ostringstream comparisons_csv;
    comparisons_csv << "method_a,method_b,task,accuracy_a,accuracy_b,b,c,p_value,significant\n";
    for (const MethodComparison& cmp : comparisons) {
        for (const TaskComparison& tc : cmp.tasks) {
            comparisons_csv << csv_field(cmp.method_a) << ',' << csv_field(cmp.method_b) << ','
                            << csv_field(tc.task) << ',' << format_pct(tc.accuracy_a) << ','
                            << format_pct(tc.accuracy_b) << ',' << tc.b << ',' << tc.c << ','
                            << format_p(tc.p_value) << ',' << (tc.p_value < 0.05 ? 1 : 0) << '\n';
        }
    }
    atomic_write_file((fs::path(out_dir) / "comparisons.csv").string(), comparisons_csv.str());

    std::ostringstream costs_csv;
    costs_csv << "label,calls,prompt_tokens,completion_tokens,approximate,cost\n";
    for (const CostLine& line : costs.lines) {
        costs_csv << csv_field(line.label) << ',' << line.calls << ',' << line.prompt_tokens << ','
                  << line.completion_tokens << ',' << (line.approximate ? 1 : 0) << ','
                  << format_currency(line.cost) << '\n';
    }
    costs_csv << "total,,,,," << format_currency(costs.total) << '\n';
    atomic_write_file((fs::path(out_dir) / "costs.csv").string(), costs_csv.str());
}

}  // namespace selficl
