#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace selficl {

struct TaskSpec {
    std::string name;
    std::string description;
    // labels shared by every instance of the task, e.g. {"True", "False"};
    // empty when each input carries its own options block
    std::vector<std::string> fixed_label_space;
};

struct Query {
    std::string id;
    std::string input;
};

struct Demo {
    std::string input;
    std::string label;
};

enum class LabelOrigin { options_block, fixed_space };

struct LabelSpace {
    std::vector<std::string> labels;
    LabelOrigin origin = LabelOrigin::fixed_space;
};

// option letters of the last "Options:" block in the text, first occurrence
// order, duplicates dropped; empty when there is no well formed block
std::vector<char> scan_option_letters(std::string_view input);

// label space for one concrete input: prefer the input's own options block,
// fall back to the task wide fixed space, otherwise NoLabelSpace
LabelSpace infer_label_space(const TaskSpec& task, std::string_view input);

// canonical form used for matching: trim, peel matched outer parentheses,
// drop trailing punctuation, repeat until stable, then lowercase
std::string canonical_label_text(std::string_view raw);

// map free text onto one of the space's labels; exact canonical match first,
// then unique canonical prefix; UnmatchableLabel otherwise (ambiguous flag
// set when several labels share the prefix)
std::string normalize_label(const LabelSpace& space, std::string_view raw);

// how a label is written inside a prompt: "(B)" for options blocks, the
// label text itself for fixed spaces
std::string render_label(const LabelSpace& space, const std::string& label);

struct TaskManifestEntry {
    TaskSpec task;
    std::string data_path;          // resolved against the manifest location
    std::size_t expected_examples = 0;  // 0 means unspecified
};

// manifest is a file of "key: value" documents (or a directory of *.task
// files, read in name order); keys: name, description, fixed_label_space,
// data_path, expected_examples
std::vector<TaskManifestEntry> load_task_manifest(const std::string& path);

}  // namespace selficl
