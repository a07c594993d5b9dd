#include "selficl/extraction.hpp"

#include <optional>

#include "selficl/errors.hpp"
#include "selficl/util.hpp"

namespace selficl {

namespace {

// exact canonical equality only, no prefix guessing
std::optional<std::string> match_exact(const LabelSpace& space, std::string_view text) {
    const std::string canon = canonical_label_text(text);
    if (canon.empty()) return std::nullopt;
    for (const std::string& label : space.labels) {
        if (canonical_label_text(label) == canon) return label;
    }
    return std::nullopt;
}

std::size_t find_last_answer_is(const std::string& completion) {
    const std::string lowered = lower_ascii(completion);
    return lowered.rfind("answer is");
}

}  // namespace

std::string extract_answer(const LabelSpace& space, const std::string& completion) {
    static constexpr std::string_view kMarker = "answer is";

    std::size_t pos = find_last_answer_is(completion);
    if (pos != std::string::npos) {
        std::string_view rest(completion);
        rest.remove_prefix(pos + kMarker.size());
        std::size_t cut = rest.find_first_of(".\n");
        std::string clause = trim(rest.substr(0, cut));
        if (!clause.empty()) {
            try {
                return normalize_label(space, clause);
            } catch (const UnmatchableLabel& e) {
                if (e.ambiguous) throw;
            }
            std::vector<std::string> tokens = whitespace_tokens(clause);
            if (!tokens.empty()) {
                try {
                    return normalize_label(space, tokens.front());
                } catch (const UnmatchableLabel& e) {
                    if (e.ambiguous) throw;
                }
            }
        }
    }

    // no usable "answer is" clause; look for the last "(X)" that is a label
    for (std::size_t i = completion.size(); i >= 3; --i) {
        std::size_t start = i - 3;
        if (completion[start] != '(' || completion[start + 2] != ')') continue;
        auto hit = match_exact(space, completion.substr(start, 3));
        if (hit) return *hit;
    }

    std::vector<std::string> tokens = whitespace_tokens(completion);
    for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
        auto hit = match_exact(space, *it);
        if (hit) return *hit;
    }

    throw NoAnswerFound("no label found in completion: '"
                        + (completion.size() > 120 ? completion.substr(0, 120) + "..." : completion)
                        + "'");
}

}  // namespace selficl
