#include "semsteer/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "semsteer/errors.hpp"

namespace semsteer {

using nlohmann::json;

std::string_view to_string(TargetSelector t) {
  switch (t) {
    case TargetSelector::Hazard: return "hazard";
    case TargetSelector::TaskRelevant: return "task_relevant";
    case TargetSelector::AllTaskObjects: return "all_task_objects";
  }
  return "?";
}

std::string_view to_string(PipelineSpec::Kind k) {
  switch (k) {
    case PipelineSpec::Kind::Guardian: return "guardian";
    case PipelineSpec::Kind::Auditor: return "auditor";
    case PipelineSpec::Kind::Attacker: return "attacker";
  }
  return "?";
}

std::vector<const AnnotatedObject*> resolve_targets(const Sample& sample, TargetSelector selector) {
  const auto* hazard = sample.hazard_object();
  const auto task = sample.objects_with_role(ObjectRole::TaskRelevant);
  std::vector<const AnnotatedObject*> out;
  switch (selector) {
    case TargetSelector::Hazard:
      if (hazard) out.push_back(hazard);
      else if (!task.empty()) out.push_back(task.front());
      break;
    case TargetSelector::TaskRelevant:
      if (!task.empty()) out.push_back(task.front());
      else if (hazard) out.push_back(hazard);
      break;
    case TargetSelector::AllTaskObjects:
      for (const auto& o : sample.objects)
        if (o.role != ObjectRole::Background) out.push_back(&o);
      break;
  }
  if (out.empty()) {
    throw MissingAnnotationError("sample " + sample.id + " has no annotated object for target '" +
                                 std::string(to_string(selector)) + "'");
  }
  return out;
}

std::string Condition::trigger_label() const {
  std::optional<MarkerColor> painted;
  if (marker) painted = marker->color;
  if (pipeline && pipeline->kind == PipelineSpec::Kind::Auditor) {
    painted = pipeline->auditor_variant == AuditorVariant::HotWhite ? MarkerColor::White : MarkerColor::Red;
  }
  const SteeringMode mode{prompt.kind, prompt.color, std::nullopt};
  if (painted) return std::string(to_string(trigger_condition(*painted, mode)));
  return prompt.kind == SteeringMode::Kind::ICF_general ? "general" : "none";
}

const Condition* RunConfig::find_condition(std::string_view name) const {
  for (const auto& c : conditions)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [k, v] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; });
    if (!ok) throw ConfigError(path.empty() ? k : path + "." + k, "unknown field");
  }
}

std::string join_path(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

const json* opt(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

const json& req(const json& j, const char* key, const std::string& path) {
  const json* v = opt(j, key);
  if (!v) throw ConfigError(join_path(path, key), "required field is missing");
  return *v;
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

std::int64_t get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<std::int64_t>();
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
  return v.get<bool>();
}

template <typename F>
auto enum_field(const json& v, const std::string& path, F parse) {
  const std::string s = get_string(v, path);
  try {
    return parse(s);
  } catch (const ArgumentError& e) {
    throw ConfigError(path, e.what());
  }
}

TargetSelector parse_target(const json& v, const std::string& path) {
  return enum_field(v, path, [](const std::string& s) {
    for (auto t : {TargetSelector::Hazard, TargetSelector::TaskRelevant, TargetSelector::AllTaskObjects})
      if (s == to_string(t)) return t;
    throw ArgumentError("expected hazard, task_relevant, or all_task_objects");
  });
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

BackendSpec parse_backend(const json& j, const std::string& path, const std::filesystem::path& base) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  BackendSpec b;
  const std::string kind = get_string(req(j, "kind", path), join_path(path, "kind"));
  if (kind == "mock") {
    only_keys(j, path, {"kind", "script", "model"});
    b.kind = BackendSpec::Kind::Mock;
    b.script = resolve(base, get_string(req(j, "script", path), join_path(path, "script")));
    if (const json* m = opt(j, "model")) b.model_name = get_string(*m, join_path(path, "model"));
    return b;
  }
  if (kind != "http") throw ConfigError(join_path(path, "kind"), "expected 'mock' or 'http'");
  only_keys(j, path, {"kind", "url", "model", "api_key_env", "max_tokens", "temperature", "timeout_s"});
  b.kind = BackendSpec::Kind::Http;
  b.endpoint.url = get_string(req(j, "url", path), join_path(path, "url"));
  b.endpoint.model = get_string(req(j, "model", path), join_path(path, "model"));
  b.model_name = b.endpoint.model;
  if (const json* v = opt(j, "api_key_env")) b.endpoint.api_key_env = get_string(*v, join_path(path, "api_key_env"));
  if (const json* v = opt(j, "max_tokens")) {
    b.endpoint.max_tokens = static_cast<int>(get_int(*v, join_path(path, "max_tokens")));
    if (b.endpoint.max_tokens < 1) throw ConfigError(join_path(path, "max_tokens"), "must be at least 1");
  }
  if (const json* v = opt(j, "temperature")) b.endpoint.temperature = get_number(*v, join_path(path, "temperature"));
  if (const json* v = opt(j, "timeout_s")) b.endpoint.timeout_s = static_cast<int>(get_int(*v, join_path(path, "timeout_s")));
  if (b.endpoint.url.find("://") == std::string::npos) {
    throw ConfigError(join_path(path, "url"), "expected scheme://host[:port][/path]");
  }
  if (!b.endpoint.api_key_env.empty()) {
    const char* v = std::getenv(b.endpoint.api_key_env.c_str());
    if (!v || !*v) {
      throw ConfigError(join_path(path, "api_key_env"),
                        "environment variable '" + b.endpoint.api_key_env + "' is not set");
    }
  }
  return b;
}

PromptSpec parse_prompt(const json& j, const std::string& path) {
  PromptSpec p;
  if (j.is_string()) {
    p.kind = enum_field(j, path, parse_steering_kind);
  } else {
    only_keys(j, path, {"kind", "color", "region_target"});
    p.kind = enum_field(req(j, "kind", path), join_path(path, "kind"), parse_steering_kind);
    if (const json* c = opt(j, "color")) p.color = enum_field(*c, join_path(path, "color"), parse_marker_color);
    if (const json* t = opt(j, "region_target")) p.region_target = parse_target(*t, join_path(path, "region_target"));
  }
  if (p.kind == SteeringMode::Kind::ICF_color && !p.color) {
    throw ConfigError(join_path(path, "color"), "ICF_color requires exactly one color");
  }
  if (p.kind != SteeringMode::Kind::ICF_color && p.color) {
    throw ConfigError(join_path(path, "color"), "only ICF_color takes a color");
  }
  return p;
}

PipelineSpec parse_pipeline(const json& j, const std::string& path) {
  only_keys(j, path, {"kind", "variant", "border_margin", "cloak_filled", "distractor_count", "shuffle_seed"});
  PipelineSpec p;
  const std::string kind = get_string(req(j, "kind", path), join_path(path, "kind"));
  if (kind == "guardian") p.kind = PipelineSpec::Kind::Guardian;
  else if (kind == "auditor") p.kind = PipelineSpec::Kind::Auditor;
  else if (kind == "attacker") p.kind = PipelineSpec::Kind::Attacker;
  else throw ConfigError(join_path(path, "kind"), "expected guardian, auditor, or attacker");
  if (const json* v = opt(j, "variant")) {
    p.auditor_variant = enum_field(*v, join_path(path, "variant"), parse_auditor_variant);
  }
  if (const json* v = opt(j, "border_margin")) {
    p.border_margin = get_number(*v, join_path(path, "border_margin"));
    if (!(p.border_margin >= 0 && p.border_margin < 0.5)) {
      throw ConfigError(join_path(path, "border_margin"), "must lie in [0, 0.5)");
    }
  }
  if (const json* v = opt(j, "cloak_filled")) p.attacker.cloak_filled = get_bool(*v, join_path(path, "cloak_filled"));
  if (const json* v = opt(j, "distractor_count")) {
    p.attacker.distractor_count = static_cast<int>(get_int(*v, join_path(path, "distractor_count")));
    if (p.attacker.distractor_count < 0) throw ConfigError(join_path(path, "distractor_count"), "must be >= 0");
  }
  if (const json* v = opt(j, "shuffle_seed")) {
    p.attacker.shuffle_seed = static_cast<std::uint64_t>(get_int(*v, join_path(path, "shuffle_seed")));
  }
  return p;
}

}  // namespace

Condition parse_condition(const json& j, const std::string& path) {
  only_keys(j, path, {"name", "view_mode", "view_target", "marker", "distractor", "prompt_mode", "pipeline"});
  Condition c;
  c.name = get_string(req(j, "name", path), join_path(path, "name"));
  if (c.name.empty()) throw ConfigError(join_path(path, "name"), "must be nonempty");
  if (const json* v = opt(j, "view_mode")) c.view_mode = enum_field(*v, join_path(path, "view_mode"), parse_view_mode);
  if (const json* v = opt(j, "view_target")) c.view_target = parse_target(*v, join_path(path, "view_target"));
  if (const json* v = opt(j, "marker")) {
    const std::string mp = join_path(path, "marker");
    only_keys(*v, mp, {"color", "target", "filled"});
    MarkerCondition m;
    m.color = enum_field(req(*v, "color", mp), join_path(mp, "color"), parse_marker_color);
    if (const json* t = opt(*v, "target")) m.target = parse_target(*t, join_path(mp, "target"));
    if (const json* f = opt(*v, "filled")) m.filled = get_bool(*f, join_path(mp, "filled"));
    c.marker = m;
  }
  if (const json* v = opt(j, "distractor")) {
    const std::string dp = join_path(path, "distractor");
    only_keys(*v, dp, {"kind", "params", "seed"});
    DistractorCondition d;
    d.kind = enum_field(req(*v, "kind", dp), join_path(dp, "kind"), parse_distractor_kind);
    if (const json* p = opt(*v, "params")) {
      const std::string pp = join_path(dp, "params");
      only_keys(*p, pp, {"text", "count"});
      if (const json* t = opt(*p, "text")) d.params.text = get_string(*t, join_path(pp, "text"));
      if (const json* n = opt(*p, "count")) d.params.count = static_cast<int>(get_int(*n, join_path(pp, "count")));
    }
    if (const json* s = opt(*v, "seed")) d.seed = static_cast<std::uint64_t>(get_int(*s, join_path(dp, "seed")));
    if (d.kind == DistractorKind::Sticker && (!d.params.text || d.params.text->empty())) {
      throw ConfigError(join_path(dp, "params.text"), "sticker distractor requires text");
    }
    c.distractor = d;
  }
  if (const json* v = opt(j, "prompt_mode")) c.prompt = parse_prompt(*v, join_path(path, "prompt_mode"));
  if (const json* v = opt(j, "pipeline")) {
    c.pipeline = parse_pipeline(*v, join_path(path, "pipeline"));
    if (c.marker) throw ConfigError(join_path(path, "marker"), "pipeline conditions may not also specify a marker");
  }
  return c;
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.max_concurrency < 1) throw ConfigError("max_concurrency", "must be at least 1");
  if (cfg.k < 1) throw ConfigError("k", "must be at least 1");
  std::set<std::string> names;
  for (std::size_t i = 0; i < cfg.conditions.size(); ++i) {
    const auto& c = cfg.conditions[i];
    if (!names.insert(c.name).second) {
      throw ConfigError("conditions[" + std::to_string(i) + "].name", "duplicate condition name '" + c.name + "'");
    }
    if (c.pipeline && c.marker) {
      throw ConfigError("conditions[" + std::to_string(i) + "].marker", "pipeline conditions may not also specify a marker");
    }
    if (c.pipeline && c.pipeline->kind == PipelineSpec::Kind::Guardian && !cfg.spotter) {
      throw ConfigError("spotter", "condition '" + c.name + "' uses the guardian pipeline but no spotter is configured");
    }
    if (c.pipeline && c.pipeline->kind == PipelineSpec::Kind::Auditor && !cfg.attention_dir) {
      throw ConfigError("attention_dir", "condition '" + c.name + "' uses the auditor pipeline but no attention_dir is set");
    }
  }
  if (cfg.judge.kind == JudgeSpec::Kind::Llm && !cfg.judge.backend) {
    throw ConfigError("judge.backend", "llm judge requires a backend");
  }
}

RunConfig parse_run_config(const json& j, const std::filesystem::path& base) {
  only_keys(j, "", {"dataset", "backend", "judge", "spotter", "spotter_use_gt_boxes", "attention_dir", "conditions",
                    "k", "seed", "max_concurrency", "output_dir", "baseline", "templates_dir", "run_id"});
  RunConfig cfg;
  cfg.dataset = resolve(base, get_string(req(j, "dataset", ""), "dataset"));
  cfg.backend = parse_backend(req(j, "backend", ""), "backend", base);
  if (const json* v = opt(j, "judge")) {
    only_keys(*v, "judge", {"kind", "backend"});
    const std::string kind = get_string(req(*v, "kind", "judge"), "judge.kind");
    if (kind == "rule") {
      cfg.judge.kind = JudgeSpec::Kind::Rule;
    } else if (kind == "llm") {
      cfg.judge.kind = JudgeSpec::Kind::Llm;
      cfg.judge.backend = parse_backend(req(*v, "backend", "judge"), "judge.backend", base);
    } else {
      throw ConfigError("judge.kind", "expected 'rule' or 'llm'");
    }
  }
  if (const json* v = opt(j, "spotter")) cfg.spotter = parse_backend(*v, "spotter", base);
  if (const json* v = opt(j, "spotter_use_gt_boxes")) cfg.spotter_use_gt_boxes = get_bool(*v, "spotter_use_gt_boxes");
  if (const json* v = opt(j, "attention_dir")) cfg.attention_dir = resolve(base, get_string(*v, "attention_dir"));
  const json& conds = req(j, "conditions", "");
  if (!conds.is_array()) throw ConfigError("conditions", "expected an array");
  for (std::size_t i = 0; i < conds.size(); ++i) {
    cfg.conditions.push_back(parse_condition(conds[i], "conditions[" + std::to_string(i) + "]"));
  }
  if (const json* v = opt(j, "k")) cfg.k = static_cast<int>(get_int(*v, "k"));
  if (const json* v = opt(j, "seed")) cfg.seed = static_cast<std::uint64_t>(get_int(*v, "seed"));
  if (const json* v = opt(j, "max_concurrency")) cfg.max_concurrency = static_cast<int>(get_int(*v, "max_concurrency"));
  cfg.output_dir = resolve(base, opt(j, "output_dir") ? get_string(*opt(j, "output_dir"), "output_dir") : "out");
  if (const json* v = opt(j, "baseline")) {
    cfg.baseline = get_string(*v, "baseline");
    if (!cfg.find_condition(cfg.baseline)) {
      throw ConfigError("baseline", "references unknown condition '" + cfg.baseline + "'");
    }
  }
  if (const json* v = opt(j, "templates_dir")) cfg.templates_dir = resolve(base, get_string(*v, "templates_dir"));
  if (const json* v = opt(j, "run_id")) cfg.run_id = get_string(*v, "run_id");
  validate_run_config(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

}  // namespace semsteer
