#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "semsteer/backend.hpp"
#include "semsteer/pipelines.hpp"
#include "semsteer/prompt.hpp"
#include "semsteer/visual.hpp"

namespace semsteer {

// Which annotated object(s) a marker, an Mt region, or a crop refers to.
// Hazard falls back to the first task_relevant object (safe scenes usually
// carry no hazard annotation); TaskRelevant falls back to the hazard.
enum class TargetSelector { Hazard, TaskRelevant, AllTaskObjects };
std::string_view to_string(TargetSelector t);

std::vector<const AnnotatedObject*> resolve_targets(const Sample& sample, TargetSelector selector);

struct MarkerCondition {
  MarkerColor color = MarkerColor::Red;
  TargetSelector target = TargetSelector::Hazard;
  bool filled = false;
};

struct DistractorCondition {
  DistractorKind kind = DistractorKind::NoisePatch;
  DistractorParams params;
  std::uint64_t seed = 0;
};

struct PromptSpec {
  SteeringMode::Kind kind = SteeringMode::Kind::IC;
  std::optional<MarkerColor> color;                   // ICF_color
  TargetSelector region_target = TargetSelector::Hazard;  // Mt
};

struct PipelineSpec {
  enum class Kind { Guardian, Auditor, Attacker };
  Kind kind = Kind::Guardian;
  AuditorVariant auditor_variant = AuditorVariant::HotRed;
  double border_margin = kDefaultBorderMargin;
  AttackerOptions attacker;
};
std::string_view to_string(PipelineSpec::Kind k);

struct Condition {
  std::string name;
  ViewMode view_mode = ViewMode::Full;
  TargetSelector view_target = TargetSelector::Hazard;
  std::optional<MarkerCondition> marker;
  std::optional<DistractorCondition> distractor;
  PromptSpec prompt;
  std::optional<PipelineSpec> pipeline;

  // matched / general / mismatched / none, for run labeling.
  std::string trigger_label() const;
};

struct BackendSpec {
  enum class Kind { Mock, Http };
  Kind kind = Kind::Mock;
  std::filesystem::path script;  // mock
  EndpointConfig endpoint;       // http
  std::string model_name = "mock";
};

struct JudgeSpec {
  enum class Kind { Rule, Llm };
  Kind kind = Kind::Rule;
  std::optional<BackendSpec> backend;  // llm
};

struct RunConfig {
  std::filesystem::path dataset;
  BackendSpec backend;
  JudgeSpec judge;
  std::optional<BackendSpec> spotter;
  bool spotter_use_gt_boxes = false;
  std::optional<std::filesystem::path> attention_dir;  // "<scenario>_<context>.json" per sample
  std::vector<Condition> conditions;
  int k = kDefaultTopK;
  std::uint64_t seed = 0;
  int max_concurrency = 1;
  std::filesystem::path output_dir;
  std::string baseline = "IC";
  std::optional<std::filesystem::path> templates_dir;
  std::string run_id;  // generated when empty

  const Condition* find_condition(std::string_view name) const;
};

Condition parse_condition(const nlohmann::json& j, const std::string& path);

// Relative paths resolve against `base_dir`. Throws ConfigError naming the
// offending field path.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Checks cross-field rules; parse_run_config calls it.
void validate_run_config(const RunConfig& config);

}  // namespace semsteer
