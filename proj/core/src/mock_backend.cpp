#include <nlohmann/json.hpp>

#include "selficl/errors.hpp"
#include "selficl/gateway.hpp"
#include "selficl/prompt.hpp"
#include "selficl/task.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

bool looks_like_sha256(const std::string& s) {
    if (s.size() != 64) return false;
    for (char c : s) {
        bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!hex) return false;
    }
    return true;
}

// the example instance the generation prompt was built around
std::string generation_base(const std::string& prompt) {
    std::size_t start = std::string::npos;
    for (std::string_view marker : {"Example instance:\n", "Example instance 1:\n"}) {
        std::size_t at = prompt.find(marker);
        if (at != std::string::npos) {
            start = at + marker.size();
            break;
        }
    }
    if (start == std::string::npos) return {};
    std::size_t end = prompt.find("\n\nExample instance", start);
    if (end == std::string::npos) end = prompt.find("\n\nPlease come up", start);
    if (end == std::string::npos) end = prompt.size();
    return prompt.substr(start, end - start);
}

std::string numbered_variants(const std::string& base, std::size_t k) {
    std::vector<std::string> lines = split_lines(base);
    if (lines.empty()) lines.emplace_back("instance");
    std::string out;
    for (std::size_t i = 1; i <= k; ++i) {
        if (i > 1) out += '\n';
        out += std::to_string(i);
        out += ") ";
        out += lines[0] + " (variant " + std::to_string(i) + ")";
        for (std::size_t j = 1; j < lines.size(); ++j) {
            out += '\n';
            out += lines[j];
        }
    }
    return out;
}

}  // namespace

MockBackend::MockBackend(std::string fallback_text) : fallback_text_(std::move(fallback_text)) {}

void MockBackend::add_fixture(const std::string& prompt_or_sha256, const std::string& completion) {
    const std::string key =
        looks_like_sha256(prompt_or_sha256) ? prompt_or_sha256 : sha256_hex(prompt_or_sha256);
    fixtures_[key] = completion;
}

void MockBackend::load_fixtures(const std::string& json_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(json_path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("fixture file " + json_path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("fixture file " + json_path + " must be a JSON object");
    for (auto& [key, value] : j.items()) {
        if (!value.is_string()) {
            throw ConfigError("fixture file " + json_path + ": value for '" + key
                              + "' must be a string");
        }
        add_fixture(key, value.get<std::string>());
    }
}

Completion MockBackend::complete(const CompletionRequest& req) {
    calls_.fetch_add(1);
    std::string text;

    if (auto it = fixtures_.find(sha256_hex(req.prompt)); it != fixtures_.end()) {
        text = it->second;
    } else if (req.prompt.find("\nPlease come up with ") != std::string::npos) {
        std::size_t at = req.prompt.rfind("come up with ");
        std::size_t k = 0;
        for (std::size_t i = at + 13; i < req.prompt.size(); ++i) {
            char c = req.prompt[i];
            if (c < '0' || c > '9') break;
            k = k * 10 + static_cast<std::size_t>(c - '0');
        }
        if (k == 0) k = 1;
        text = numbered_variants(generation_base(req.prompt), k);
    } else if (ends_with(req.prompt, kCotTrigger)) {
        std::vector<char> letters = scan_option_letters(req.prompt);
        if (!letters.empty()) {
            text = " We compare the options. The answer is (";
            text += letters.front();
            text += ").";
        } else {
            text = " The answer is " + fallback_text_ + ".";
        }
    } else if (ends_with(req.prompt, "\nA:")) {
        std::vector<char> letters = scan_option_letters(req.prompt);
        if (!letters.empty()) {
            text = "(";
            text += letters.front();
            text += ")";
        } else {
            text = fallback_text_;
        }
    } else {
        text = fallback_text_;
    }

    Completion completion;
    completion.text = std::move(text);
    completion.usage.prompt_tokens = approx_token_count(req.prompt);
    completion.usage.completion_tokens = approx_token_count(completion.text);
    completion.usage.approximate = true;
    return completion;
}

}  // namespace selficl
