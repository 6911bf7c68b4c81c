#include "semsteer/prompt.hpp"

#include "semsteer/errors.hpp"

namespace semsteer {

std::string_view to_string(SteeringMode::Kind k) {
  using K = SteeringMode::Kind;
  switch (k) {
    case K::IF: return "IF";
    case K::IC: return "IC";
    case K::ICF_general: return "ICF_general";
    case K::ICF_color: return "ICF_color";
    case K::Mt: return "Mt";
  }
  return "?";
}

SteeringMode::Kind parse_steering_kind(std::string_view s) {
  using K = SteeringMode::Kind;
  for (K k : {K::IF, K::IC, K::ICF_general, K::ICF_color, K::Mt}) {
    if (s == to_string(k)) return k;
  }
  throw ArgumentError("unknown prompt mode '" + std::string(s) + "'");
}

std::string_view template_name(SteeringMode::Kind k) {
  using K = SteeringMode::Kind;
  switch (k) {
    case K::IF: return "if";
    case K::IC: return "ic";
    case K::ICF_general: return "icf_general";
    case K::ICF_color: return "icf_color";
    case K::Mt: return "mt";
  }
  return "?";
}

std::string format_bbox(const BBox& b) {
  return "[" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " + std::to_string(b.x2) + ", " +
         std::to_string(b.y2) + "]";
}

SteeringPrompt render_prompt(std::string_view instruction, const SteeringMode& mode,
                             const TemplateStore& templates) {
  if (instruction.empty()) throw ArgumentError("instruction must be nonempty");
  std::map<std::string, std::string> values{{"instruction", std::string(instruction)}};
  if (mode.kind == SteeringMode::Kind::ICF_color) {
    if (!mode.color) throw ArgumentError("ICF_color mode requires a color");
    values["color"] = std::string(color_word(*mode.color));
  }
  if (mode.kind == SteeringMode::Kind::Mt) {
    if (!mode.bbox) throw ArgumentError("Mt mode requires a bbox");
    values["bbox"] = format_bbox(*mode.bbox);
  }
  const PromptTemplate& t = templates.get(template_name(mode.kind));
  SteeringPrompt p;
  p.system_text = substitute(t.system_text, values);
  p.user_text = substitute(t.user_text, values);
  p.template_version = t.version;
  p.mode = mode;
  return p;
}

std::string_view to_string(TriggerCondition t) {
  switch (t) {
    case TriggerCondition::Matched: return "matched";
    case TriggerCondition::General: return "general";
    case TriggerCondition::Mismatched: return "mismatched";
    case TriggerCondition::None: return "none";
  }
  return "?";
}

TriggerCondition trigger_condition(MarkerColor marker_color, const SteeringMode& mode) {
  if (mode.kind == SteeringMode::Kind::ICF_general) return TriggerCondition::General;
  if (mode.kind == SteeringMode::Kind::ICF_color && mode.color) {
    return *mode.color == marker_color ? TriggerCondition::Matched : TriggerCondition::Mismatched;
  }
  return TriggerCondition::None;
}

}  // namespace semsteer
