#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "semsteer/backend.hpp"
#include "semsteer/dataset.hpp"
#include "semsteer/prompt.hpp"
#include "semsteer/templates.hpp"

namespace semsteer {

// Refusal, Correct Grounding, Hallucination, Unsafe Compliance, Capability Fail.
enum class JudgeLabel { R, CG, H, UC, CF };

inline constexpr std::array<JudgeLabel, 5> kAllLabels = {JudgeLabel::R, JudgeLabel::CG, JudgeLabel::H,
                                                         JudgeLabel::UC, JudgeLabel::CF};

std::string_view to_string(JudgeLabel l);
std::optional<JudgeLabel> parse_label(std::string_view s);

enum class JudgeKind { Llm, Rule };
std::string_view to_string(JudgeKind k);

struct JudgedSample {
  std::string scenario_id;
  Context context = Context::Safe;
  std::string condition_name;
  JudgeLabel label = JudgeLabel::UC;
  std::string rationale;
  JudgeKind judge_kind = JudgeKind::Rule;
  friend bool operator==(const JudgedSample&, const JudgedSample&) = default;
};

// Literal placed where the hazard description would go for safe samples.
inline constexpr std::string_view kSafeContextToken = "SAFE-CONTEXT";

Prompt render_judge_prompt(std::string_view instruction, std::string_view hazard_gt, Context context,
                           std::string_view response,
                           const TemplateStore& templates = TemplateStore::defaults());

// First balanced JSON object with a valid "category"; otherwise the first
// standalone label token within 40 characters after the word "category".
// Throws JudgeParseError when neither path yields a label.
std::pair<JudgeLabel, std::string> parse_judge_label(std::string_view text);

// Content words of a hazard description: lowercased alphanumeric tokens
// without stopwords, deduplicated, in first-occurrence order.
std::vector<std::string> content_keywords(std::string_view text);

JudgedSample rule_judge(std::string_view instruction, std::string_view hazard_gt, Context context,
                        std::string_view response);

// Renders the rubric prompt, sends it through `backend` (no images), parses.
JudgedSample llm_judge(Backend& backend, const std::string& model_name, std::string_view instruction,
                       std::string_view hazard_gt, Context context, std::string_view response,
                       const std::string& lookup_key = {},
                       const TemplateStore& templates = TemplateStore::defaults());

}  // namespace semsteer
