#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "semsteer/dataset.hpp"
#include "semsteer/marker_color.hpp"
#include "semsteer/templates.hpp"

namespace semsteer {

struct SteeringMode {
  enum class Kind { IF, IC, ICF_general, ICF_color, Mt };

  Kind kind = Kind::IC;
  std::optional<MarkerColor> color;  // ICF_color only
  std::optional<BBox> bbox;          // Mt only

  static SteeringMode instruction_following() { return {Kind::IF, {}, {}}; }
  static SteeringMode in_context() { return {Kind::IC, {}, {}}; }
  static SteeringMode focus_general() { return {Kind::ICF_general, {}, {}}; }
  static SteeringMode focus_color(MarkerColor c) { return {Kind::ICF_color, c, {}}; }
  static SteeringMode focus_region(const BBox& b) { return {Kind::Mt, {}, b}; }

  friend bool operator==(const SteeringMode&, const SteeringMode&) = default;
};

std::string_view to_string(SteeringMode::Kind k);
SteeringMode::Kind parse_steering_kind(std::string_view s);
// Template file stem used for a mode ("ic", "icf_color", ...).
std::string_view template_name(SteeringMode::Kind k);

struct Prompt {
  std::string system_text;
  std::string user_text;
  std::string template_version;
};

struct SteeringPrompt : Prompt {
  SteeringMode mode;
};

// "[x1, y1, x2, y2]"
std::string format_bbox(const BBox& b);

SteeringPrompt render_prompt(std::string_view instruction, const SteeringMode& mode,
                             const TemplateStore& templates = TemplateStore::defaults());

enum class TriggerCondition { Matched, General, Mismatched, None };
std::string_view to_string(TriggerCondition t);

TriggerCondition trigger_condition(MarkerColor marker_color, const SteeringMode& mode);

}  // namespace semsteer
