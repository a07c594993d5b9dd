#pragma once

#include <string>

#include "selficl/task.hpp"

namespace selficl {

// Pull the final answer out of a model completion and map it onto the label
// space. Tried in order:
//   1. text after the last "answer is" (case insensitive), first as the
//      whole clause, then as its first token
//   2. the last parenthesized single letter that is a label
//   3. the last whitespace token that is a label
// An ambiguous prefix match in rule 1 propagates as UnmatchableLabel; when
// nothing matches the result is NoAnswerFound.
std::string extract_answer(const LabelSpace& space, const std::string& completion);

}  // namespace selficl
