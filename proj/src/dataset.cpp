#include "semsteer/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "json.hpp"

namespace semsteer {

using nlohmann::json;

std::string_view to_string(ObjectRole r) {
  switch (r) {
    case ObjectRole::TaskRelevant: return "task_relevant";
    case ObjectRole::Background: return "background";
    case ObjectRole::Hazard: return "hazard";
  }
  return "?";
}

std::string_view to_string(Context c) { return c == Context::Safe ? "safe" : "unsafe"; }

ObjectRole parse_role(std::string_view s) {
  if (s == "task_relevant") return ObjectRole::TaskRelevant;
  if (s == "background") return ObjectRole::Background;
  if (s == "hazard") return ObjectRole::Hazard;
  throw ArgumentError("unknown object role '" + std::string(s) + "'");
}

Context parse_context(std::string_view s) {
  if (s == "safe") return Context::Safe;
  if (s == "unsafe") return Context::Unsafe;
  throw ArgumentError("unknown context '" + std::string(s) + "'");
}

const AnnotatedObject* Sample::find_object(std::string_view name) const {
  for (const auto& o : objects)
    if (o.name == name) return &o;
  return nullptr;
}

const AnnotatedObject* Sample::hazard_object() const {
  for (const auto& o : objects)
    if (o.role == ObjectRole::Hazard) return &o;
  return nullptr;
}

std::vector<const AnnotatedObject*> Sample::objects_with_role(ObjectRole role) const {
  std::vector<const AnnotatedObject*> out;
  for (const auto& o : objects)
    if (o.role == role) out.push_back(&o);
  return out;
}

bool operator==(const Sample& a, const Sample& b) {
  return a.id == b.id && a.image_ref == b.image_ref && a.context == b.context &&
         a.objects == b.objects && a.image_width == b.image_width &&
         a.image_height == b.image_height && a.instruction == b.instruction;
}

const Scenario* Dataset::find(std::string_view id) const {
  for (const auto& s : scenarios)
    if (s.id == id) return &s;
  return nullptr;
}

namespace {

std::string render_report(const ValidationReport& report) {
  std::string msg = std::to_string(report.size()) + " dataset violation(s):";
  for (const auto& v : report) {
    msg += "\n  [" + (v.scenario_id.empty() ? std::string("<dataset>") : v.scenario_id) + "] " +
           v.field + ": " + v.message;
  }
  return msg;
}

void check_sample(const Scenario& sc, const Sample& s, std::string_view prefix, Context expected,
                  ValidationReport& out) {
  const std::string p(prefix);
  auto add = [&](const std::string& field, const std::string& msg) {
    out.push_back({sc.id, p + "." + field, msg});
  };
  if (s.context != expected) {
    add("context", "expected context '" + std::string(to_string(expected)) + "'");
  }
  if (s.image_ref.empty()) add("image", "image reference is missing");
  if (s.image_width <= 0) add("width", "image width must be positive");
  if (s.image_height <= 0) add("height", "image height must be positive");
  if (s.instruction && *s.instruction != sc.instruction) {
    add("instruction", "paired design: instruction must be identical across safe and unsafe samples");
  }
  int hazards = 0;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& o = s.objects[i];
    const std::string op = "objects[" + std::to_string(i) + "]";
    if (o.name.empty()) add(op + ".name", "object name must be nonempty");
    const auto& b = o.bbox;
    if (!(b.x1 < b.x2 && b.y1 < b.y2)) add(op + ".bbox", "bbox requires x1 < x2 and y1 < y2");
    if (b.x1 < 0 || b.y1 < 0) add(op + ".bbox", "bbox must not have negative coordinates");
    if ((s.image_width > 0 && b.x2 > s.image_width) || (s.image_height > 0 && b.y2 > s.image_height)) {
      add(op + ".bbox", "bbox exceeds image bounds " + std::to_string(s.image_width) + "x" +
                            std::to_string(s.image_height));
    }
    if (o.role == ObjectRole::Hazard) ++hazards;
  }
  if (hazards > 1) add("objects", "at most one object per sample may have role 'hazard'");
}

// Schema reader that records every missing or mistyped field instead of
// stopping at the first one.
class Reader {
 public:
  explicit Reader(ValidationReport& out) : out_(out) {}

  const json* field(const json& obj, const char* key, const std::string& sid,
                    const std::string& path, bool required = true) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) out_.push_back({sid, path, "required field is missing"});
      return nullptr;
    }
    return &*it;
  }

  std::string str(const json& obj, const char* key, const std::string& sid, const std::string& path,
                  bool required = true) {
    const json* v = field(obj, key, sid, path, required);
    if (!v) return {};
    if (!v->is_string()) {
      out_.push_back({sid, path, "expected a string"});
      return {};
    }
    return v->get<std::string>();
  }

  int integer(const json& obj, const char* key, const std::string& sid, const std::string& path) {
    const json* v = field(obj, key, sid, path);
    if (!v) return 0;
    if (!v->is_number_integer()) {
      out_.push_back({sid, path, "expected an integer"});
      return 0;
    }
    return v->get<int>();
  }

  Sample sample(const json& obj, const std::string& sid, const std::string& prefix, Context ctx) {
    Sample s;
    s.id = sid + "/" + std::string(to_string(ctx));
    s.context = ctx;
    if (!obj.is_object()) {
      out_.push_back({sid, prefix, "expected an object"});
      return s;
    }
    s.image_ref = str(obj, "image", sid, prefix + ".image");
    s.image_width = integer(obj, "width", sid, prefix + ".width");
    s.image_height = integer(obj, "height", sid, prefix + ".height");
    if (obj.contains("instruction")) s.instruction = str(obj, "instruction", sid, prefix + ".instruction");
    if (const json* objs = field(obj, "objects", sid, prefix + ".objects", false)) {
      if (!objs->is_array()) {
        out_.push_back({sid, prefix + ".objects", "expected an array"});
        return s;
      }
      for (std::size_t i = 0; i < objs->size(); ++i) {
        const std::string op = prefix + ".objects[" + std::to_string(i) + "]";
        const json& o = (*objs)[i];
        if (!o.is_object()) {
          out_.push_back({sid, op, "expected an object"});
          continue;
        }
        AnnotatedObject ao;
        ao.name = str(o, "name", sid, op + ".name");
        const std::string role = str(o, "role", sid, op + ".role");
        if (!role.empty()) {
          try {
            ao.role = parse_role(role);
          } catch (const ArgumentError&) {
            out_.push_back({sid, op + ".role", "role must be task_relevant, background, or hazard"});
          }
        }
        if (const json* bb = field(o, "bbox", sid, op + ".bbox")) {
          if (!bb->is_array() || bb->size() != 4 ||
              !std::all_of(bb->begin(), bb->end(), [](const json& v) { return v.is_number_integer(); })) {
            out_.push_back({sid, op + ".bbox", "expected [x1, y1, x2, y2] integers"});
          } else {
            ao.bbox = {(*bb)[0].get<int>(), (*bb)[1].get<int>(), (*bb)[2].get<int>(), (*bb)[3].get<int>()};
          }
        }
        s.objects.push_back(std::move(ao));
      }
    }
    return s;
  }

 private:
  ValidationReport& out_;
};

json sample_to_json(const Sample& s) {
  json objs = json::array();
  for (const auto& o : s.objects) {
    objs.push_back({{"name", o.name},
                    {"role", std::string(to_string(o.role))},
                    {"bbox", {o.bbox.x1, o.bbox.y1, o.bbox.x2, o.bbox.y2}}});
  }
  json j = {{"image", s.image_ref}, {"width", s.image_width}, {"height", s.image_height}, {"objects", objs}};
  if (s.instruction) j["instruction"] = *s.instruction;
  return j;
}

}  // namespace

DatasetValidationError::DatasetValidationError(ValidationReport report)
    : Error("validation", render_report(report)), report_(std::move(report)) {}

ValidationReport validate_scenario(const Scenario& s) {
  ValidationReport out;
  if (s.id.empty()) out.push_back({s.id, "id", "scenario id must be nonempty"});
  if (s.instruction.empty()) out.push_back({s.id, "instruction", "instruction must be nonempty"});
  if (s.hazard_gt.empty()) {
    out.push_back({s.id, "hazard_gt", "unsafe sample requires a nonempty ground-truth hazard"});
  }
  check_sample(s, s.safe_sample, "safe", Context::Safe, out);
  check_sample(s, s.unsafe_sample, "unsafe", Context::Unsafe, out);
  return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read dataset file: " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + e.what());
  }
  if (!root.is_object()) throw ParseError(path.string() + ": top level must be a JSON object");

  ValidationReport report;
  Reader rd(report);
  Dataset d;
  d.name = rd.str(root, "name", "", "name");
  const json* scs = rd.field(root, "scenarios", "", "scenarios");
  if (scs && !scs->is_array()) {
    report.push_back({"", "scenarios", "expected an array"});
    scs = nullptr;
  }
  std::set<std::string> seen;
  if (scs) {
    for (std::size_t i = 0; i < scs->size(); ++i) {
      const json& sj = (*scs)[i];
      const std::string where = "scenarios[" + std::to_string(i) + "]";
      if (!sj.is_object()) {
        report.push_back({"", where, "expected an object"});
        continue;
      }
      Scenario sc;
      sc.id = rd.str(sj, "id", where, "id");
      const std::string sid = sc.id.empty() ? where : sc.id;
      sc.instruction = rd.str(sj, "instruction", sid, "instruction");
      sc.hazard_gt = rd.str(sj, "hazard_gt", sid, "hazard_gt", false);
      sc.category = rd.str(sj, "category", sid, "category", false);
      static const json kEmpty = json::object();
      const json* safe = rd.field(sj, "safe", sid, "safe");
      const json* unsafe = rd.field(sj, "unsafe", sid, "unsafe");
      sc.safe_sample = rd.sample(safe ? *safe : kEmpty, sc.id, "safe", Context::Safe);
      sc.unsafe_sample = rd.sample(unsafe ? *unsafe : kEmpty, sc.id, "unsafe", Context::Unsafe);

      for (auto& v : validate_scenario(sc)) {
        // Skip duplicates of fields the reader already flagged as missing.
        const bool dup = std::any_of(report.begin(), report.end(), [&](const Violation& r) {
          return r.scenario_id == v.scenario_id && r.field == v.field;
        });
        if (!dup) report.push_back(std::move(v));
      }
      if (!sc.id.empty() && !seen.insert(sc.id).second) {
        report.push_back({sc.id, "id", "scenario id is not unique"});
      }
      d.scenarios.push_back(std::move(sc));
    }
  }
  if (!report.empty()) throw DatasetValidationError(std::move(report));

  const auto base = path.parent_path();
  for (auto& sc : d.scenarios) {
    for (Sample* s : {&sc.safe_sample, &sc.unsafe_sample}) {
      s->image_path = base / s->image_ref;
      if (!std::filesystem::is_regular_file(s->image_path)) {
        throw MissingImageError(s->image_path.string());
      }
      const RgbImage img = read_png(s->image_path);
      const std::string ctx(to_string(s->context));
      if (img.width() != s->image_width) {
        report.push_back({sc.id, ctx + ".width",
                          "recorded width " + std::to_string(s->image_width) + " differs from decoded " +
                              std::to_string(img.width())});
      }
      if (img.height() != s->image_height) {
        report.push_back({sc.id, ctx + ".height",
                          "recorded height " + std::to_string(s->image_height) + " differs from decoded " +
                              std::to_string(img.height())});
      }
    }
  }
  if (!report.empty()) throw DatasetValidationError(std::move(report));
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  json scs = json::array();
  for (const auto& sc : d.scenarios) {
    scs.push_back({{"id", sc.id},
                   {"instruction", sc.instruction},
                   {"hazard_gt", sc.hazard_gt},
                   {"category", sc.category},
                   {"safe", sample_to_json(sc.safe_sample)},
                   {"unsafe", sample_to_json(sc.unsafe_sample)}});
  }
  const json root = {{"name", d.name}, {"scenarios", scs}};
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot open for writing: " + path.string());
  out << root.dump(2) << '\n';
}

RgbImage load_image(const Sample& sample) {
  if (sample.image_path.empty()) throw MissingImageError(sample.image_ref);
  return read_png(sample.image_path);
}

}  // namespace semsteer
