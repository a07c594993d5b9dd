#include "selficl/prompt.hpp"

#include <sstream>

#include "selficl/errors.hpp"
#include "selficl/util.hpp"

namespace selficl {

std::string mode_name(Mode mode) {
    return mode == Mode::direct ? "direct" : "cot";
}

Mode mode_from_name(std::string_view name) {
    if (name == "direct") return Mode::direct;
    if (name == "cot") return Mode::cot;
    throw ConfigError("unknown mode '" + std::string(name) + "', expected direct or cot");
}

namespace {

void append_generation_request(std::ostringstream& out, std::size_t k, bool diversity_hints) {
    out << "Please come up with " << k;
    if (diversity_hints) out << " new, diverse, creative";
    out << " instances for the task. Begin each instance on its own line, numbered \"1)\""
           " through \"" << k << ")\", and write nothing else.";
}

}  // namespace

std::string step1_prompt(const TaskSpec& task, const std::string& query_input,
                         std::size_t k, bool diversity_hints) {
    std::ostringstream out;
    out << task.description << "\n\n";
    out << "Example instance:\n" << query_input << "\n\n";
    append_generation_request(out, k, diversity_hints);
    return out.str();
}

std::string step1_batch_prompt(const TaskSpec& task,
                               const std::vector<std::string>& query_inputs, std::size_t k) {
    std::ostringstream out;
    out << task.description << "\n\n";
    for (std::size_t i = 0; i < query_inputs.size(); ++i) {
        out << "Example instance " << (i + 1) << ":\n" << query_inputs[i] << "\n\n";
    }
    append_generation_request(out, k, /*diversity_hints=*/true);
    return out.str();
}

std::string step2_prompt(const TaskSpec& task, const std::string& pseudo_input, Mode mode) {
    return step3_prompt(task, {}, pseudo_input, mode);
}

std::string step3_prompt(const TaskSpec& task, const std::vector<Demo>& demos,
                         const std::string& query_input, Mode mode) {
    std::ostringstream out;
    out << task.description;
    for (const Demo& demo : demos) {
        out << "\n\nQ: " << demo.input << "\nA: " << demo.label;
    }
    out << "\n\nQ: " << query_input << "\nA:";
    if (mode == Mode::cot) out << ' ' << kCotTrigger;
    return out.str();
}

std::string baseline_prompt(const TaskSpec& task, const std::string& query_input, Mode mode) {
    return step3_prompt(task, {}, query_input, mode);
}

std::vector<std::string> parse_pseudo_inputs(const std::string& completion, std::size_t k) {
    std::vector<std::string> items;
    std::string current;
    bool in_item = false;
    auto flush = [&]() {
        if (!in_item) return;
        std::string item = trim(current);
        if (!item.empty()) items.push_back(std::move(item));
        current.clear();
    };
    for (const std::string& line : split_lines(completion)) {
        std::size_t digits = 0;
        while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
        if (digits > 0 && digits < line.size() && line[digits] == ')') {
            flush();
            in_item = true;
            current = line.substr(digits + 1);
        } else if (in_item) {
            current += '\n';
            current += line;
        }
        // text before the first marker is preamble, skip it
    }
    flush();
    if (items.size() < k) throw InsufficientPseudoInputs(items.size(), k);
    items.resize(k);
    return items;
}

}  // namespace selficl
