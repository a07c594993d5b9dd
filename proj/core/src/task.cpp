#include "selficl/task.hpp"

#include <algorithm>
#include <filesystem>

#include "selficl/errors.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

bool is_option_line(const std::string& line) {
    if (line.size() < 5) return false;
    if (line[0] != '(' || line[2] != ')' || line[3] != ' ') return false;
    if (line[1] < 'A' || line[1] > 'Z') return false;
    return !trim(std::string_view(line).substr(4)).empty();
}

// letters of the options block that follows the last "Options:" line
std::vector<char> options_after_marker(const std::vector<std::string>& lines) {
    std::size_t marker = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]) == "Options:") marker = i;
    }
    std::vector<char> letters;
    if (marker == lines.size()) return letters;
    for (std::size_t j = marker + 1; j < lines.size(); ++j) {
        if (!is_option_line(lines[j])) break;
        char c = lines[j][1];
        if (std::find(letters.begin(), letters.end(), c) == letters.end()) {
            letters.push_back(c);
        }
    }
    return letters;
}

}  // namespace

std::vector<char> scan_option_letters(std::string_view input) {
    return options_after_marker(split_lines(input));
}

LabelSpace infer_label_space(const TaskSpec& task, std::string_view input) {
    std::vector<char> letters = scan_option_letters(input);
    if (letters.size() >= 2) {
        LabelSpace space;
        space.origin = LabelOrigin::options_block;
        for (char c : letters) space.labels.emplace_back(1, c);
        return space;
    }
    if (task.fixed_label_space.size() >= 2) {
        return LabelSpace{task.fixed_label_space, LabelOrigin::fixed_space};
    }
    throw NoLabelSpace("no options block in input and task '" + task.name
                       + "' declares no fixed label space");
}

std::string canonical_label_text(std::string_view raw) {
    std::string s = trim(raw);
    for (;;) {
        std::string before = s;
        if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
            s = trim(std::string_view(s).substr(1, s.size() - 2));
        }
        while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos) {
            s.pop_back();
        }
        s = trim(s);
        if (s == before) break;
    }
    return lower_ascii(s);
}

std::string normalize_label(const LabelSpace& space, std::string_view raw) {
    const std::string canon = canonical_label_text(raw);
    if (canon.empty()) {
        throw UnmatchableLabel("label text is empty after normalization: '"
                               + std::string(raw) + "'");
    }
    for (const std::string& label : space.labels) {
        if (canonical_label_text(label) == canon) return label;
    }
    std::vector<const std::string*> prefix_hits;
    for (const std::string& label : space.labels) {
        if (starts_with(canonical_label_text(label), canon)) {
            prefix_hits.push_back(&label);
        }
    }
    if (prefix_hits.size() == 1) return *prefix_hits.front();
    if (prefix_hits.size() > 1) {
        throw UnmatchableLabel("'" + std::string(raw) + "' is a prefix of "
                               + std::to_string(prefix_hits.size()) + " labels",
                               /*ambiguous=*/true);
    }
    throw UnmatchableLabel("'" + std::string(raw) + "' matches no label in the space");
}

std::string render_label(const LabelSpace& space, const std::string& label) {
    if (space.origin == LabelOrigin::options_block) return "(" + label + ")";
    return label;
}

namespace {

TaskManifestEntry parse_manifest_document(const std::vector<std::string>& lines,
                                          const std::filesystem::path& base,
                                          const std::string& where) {
    TaskManifestEntry entry;
    bool saw_name = false, saw_description = false, saw_data = false;
    for (const std::string& raw_line : lines) {
        std::string line = trim(raw_line);
        if (line.empty() || line[0] == '#') continue;
        std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw ConfigError(where + ": expected 'key: value', got '" + line + "'");
        }
        std::string key = trim(std::string_view(line).substr(0, colon));
        std::string value = trim(std::string_view(line).substr(colon + 1));
        if (key == "name") {
            entry.task.name = value;
            saw_name = true;
        } else if (key == "description") {
            entry.task.description = value;
            saw_description = true;
        } else if (key == "fixed_label_space") {
            std::size_t start = 0;
            std::string_view v(value);
            while (start <= v.size()) {
                std::size_t bar = v.find('|', start);
                std::string_view piece =
                    bar == std::string_view::npos ? v.substr(start) : v.substr(start, bar - start);
                std::string label = trim(piece);
                if (!label.empty()) entry.task.fixed_label_space.push_back(label);
                if (bar == std::string_view::npos) break;
                start = bar + 1;
            }
            if (entry.task.fixed_label_space.size() < 2) {
                throw ConfigError(where + ": fixed_label_space needs at least two labels");
            }
        } else if (key == "data_path") {
            std::filesystem::path p(value);
            if (p.is_relative()) p = base / p;
            entry.data_path = p.lexically_normal().string();
            saw_data = true;
        } else if (key == "expected_examples") {
            try {
                std::size_t pos = 0;
                long long n = std::stoll(value, &pos);
                if (pos != value.size() || n <= 0) throw std::invalid_argument(value);
                entry.expected_examples = static_cast<std::size_t>(n);
            } catch (const std::exception&) {
                throw ConfigError(where + ": expected_examples must be a positive integer, got '"
                                  + value + "'");
            }
        } else {
            throw ConfigError(where + ": unknown manifest key '" + key + "'");
        }
    }
    if (!saw_name) throw ConfigError(where + ": missing 'name'");
    if (!saw_description) throw ConfigError(where + ": missing 'description'");
    if (!saw_data) throw ConfigError(where + ": missing 'data_path'");
    return entry;
}

std::vector<TaskManifestEntry> parse_manifest_file(const std::filesystem::path& path) {
    const std::string text = read_file(path.string());
    const std::filesystem::path base = path.parent_path();
    std::vector<TaskManifestEntry> entries;
    std::vector<std::string> doc;
    std::size_t doc_no = 1;
    auto flush = [&]() {
        bool blank = true;
        for (const std::string& l : doc) {
            std::string t = trim(l);
            if (!t.empty() && t[0] != '#') blank = false;
        }
        if (!blank) {
            std::string where = path.string() + " (document " + std::to_string(doc_no) + ")";
            entries.push_back(parse_manifest_document(doc, base, where));
            ++doc_no;
        }
        doc.clear();
    };
    for (const std::string& line : split_lines(text)) {
        if (trim(line) == "---") {
            flush();
        } else {
            doc.push_back(line);
        }
    }
    flush();
    return entries;
}

}  // namespace

std::vector<TaskManifestEntry> load_task_manifest(const std::string& path) {
    namespace fs = std::filesystem;
    std::vector<TaskManifestEntry> entries;
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
        std::vector<fs::path> files;
        for (const auto& de : fs::directory_iterator(path)) {
            if (de.path().extension() == ".task") files.push_back(de.path());
        }
        std::sort(files.begin(), files.end());
        for (const fs::path& f : files) {
            for (TaskManifestEntry& e : parse_manifest_file(f)) {
                entries.push_back(std::move(e));
            }
        }
        if (entries.empty()) {
            throw ConfigError("no *.task files under " + path);
        }
    } else {
        try {
            entries = parse_manifest_file(path);
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(std::string(e.what()));
        }
        if (entries.empty()) {
            throw ConfigError(path + " defines no tasks");
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            if (entries[i].task.name == entries[j].task.name) {
                throw ConfigError("duplicate task name '" + entries[i].task.name + "' in manifest");
            }
        }
    }
    return entries;
}

}  // namespace selficl
