#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "selficl/task.hpp"

namespace selficl {

enum class Mode { direct, cot };

std::string mode_name(Mode mode);
Mode mode_from_name(std::string_view name);

// appended verbatim after "A: " to elicit a reasoning chain
inline constexpr std::string_view kCotTrigger = "Let's think step by step.";

// step 1: ask the model to invent k new instances of the task, using the
// test input as the only reference
std::string step1_prompt(const TaskSpec& task, const std::string& query_input,
                         std::size_t k, bool diversity_hints);

// batch variant: several test inputs as references, one shared set of
// generated instances
std::string step1_batch_prompt(const TaskSpec& task,
                               const std::vector<std::string>& query_inputs, std::size_t k);

// step 2: zero-shot label for one generated instance
std::string step2_prompt(const TaskSpec& task, const std::string& pseudo_input, Mode mode);

// step 3: demos as "Q:/A:" pairs followed by the test input; with no demos
// this is byte for byte the zero-shot baseline prompt
std::string step3_prompt(const TaskSpec& task, const std::vector<Demo>& demos,
                         const std::string& query_input, Mode mode);

std::string baseline_prompt(const TaskSpec& task, const std::string& query_input, Mode mode);

// pull the k numbered instances out of a step 1 completion; items may span
// several lines, text before the first "1)" marker is ignored;
// InsufficientPseudoInputs when fewer than k non-empty items are found
std::vector<std::string> parse_pseudo_inputs(const std::string& completion, std::size_t k);

}  // namespace selficl
