#include "semsteer/pipelines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semsteer/errors.hpp"
#include "semsteer/rng.hpp"

namespace semsteer {

using nlohmann::json;

MarkerColor marker_for_score(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ArgumentError("risk score must lie in [0, 1]");
  if (s > 0.8) return MarkerColor::Red;
  if (s > 0.4) return MarkerColor::Orange;
  return MarkerColor::White;
}

namespace {

std::size_t balanced_array_end(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[') ++depth;
    else if (c == ']' && --depth == 0) return i + 1;
  }
  return std::string_view::npos;
}

std::optional<json> first_object_array(std::string_view text) {
  for (auto open = text.find('['); open != std::string_view::npos; open = text.find('[', open + 1)) {
    const auto end = balanced_array_end(text, open);
    if (end == std::string_view::npos) continue;
    auto j = json::parse(text.substr(open, end - open), nullptr, false);
    if (j.is_discarded() || !j.is_array()) continue;
    if (std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_object(); })) return j;
  }
  return std::nullopt;
}

std::string fmt_score(double s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

SpotterResult parse_spotter_output(std::string_view text, int image_width, int image_height) {
  const auto arr = first_object_array(text);
  if (!arr) throw SpotterParseError("no JSON array of objects found in spotter reply");
  SpotterResult out;
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const json& e = (*arr)[i];
    const std::string where = "entry " + std::to_string(i);
    if (!e.contains("name") || !e["name"].is_string() || !e.contains("score") || !e["score"].is_number() ||
        !e.contains("bbox") || !e["bbox"].is_array() || e["bbox"].size() != 4 ||
        !std::all_of(e["bbox"].begin(), e["bbox"].end(), [](const json& v) { return v.is_number(); })) {
      out.warnings.push_back(where + ": malformed, dropped");
      continue;
    }
    RiskAssessment a;
    a.object_name = e["name"].get<std::string>();
    double score = e["score"].get<double>();
    if (!std::isfinite(score)) {
      out.warnings.push_back(where + " (" + a.object_name + "): non-finite score, dropped");
      continue;
    }
    if (score < 0.0 || score > 1.0) {
      const double clamped = std::clamp(score, 0.0, 1.0);
      out.warnings.push_back(where + " (" + a.object_name + "): score " + fmt_score(score) + " clamped to " +
                             fmt_score(clamped));
      score = clamped;
    }
    a.score = score;
    auto coord = [&](int idx, int hi) {
      return std::clamp(static_cast<int>(std::lround(e["bbox"][idx].get<double>())), 0, hi);
    };
    a.bbox = {coord(0, image_width), coord(1, image_height), coord(2, image_width), coord(3, image_height)};
    if (a.bbox.x1 >= a.bbox.x2 || a.bbox.y1 >= a.bbox.y2) {
      out.warnings.push_back(where + " (" + a.object_name + "): degenerate bbox after clamping, dropped");
      continue;
    }
    out.assessments.push_back(std::move(a));
  }
  std::stable_sort(out.assessments.begin(), out.assessments.end(), [](const auto& l, const auto& r) {
    if (l.score != r.score) return l.score > r.score;
    return l.object_name < r.object_name;
  });
  return out;
}

Prompt render_spotter_prompt(std::string_view instruction, int image_width, int image_height, int k,
                             const TemplateStore& templates) {
  const PromptTemplate& t = templates.get("spotter");
  const std::map<std::string, std::string> values{{"instruction", std::string(instruction)},
                                                  {"width", std::to_string(image_width)},
                                                  {"height", std::to_string(image_height)},
                                                  {"k", std::to_string(k)}};
  return {substitute(t.system_text, values), substitute(t.user_text, values), t.version};
}

void substitute_ground_truth_boxes(std::vector<RiskAssessment>& assessments, const Sample& sample,
                                   std::vector<std::string>& warnings) {
  for (auto& a : assessments) {
    const auto it = std::find_if(sample.objects.begin(), sample.objects.end(),
                                 [&](const AnnotatedObject& o) { return lower(o.name) == lower(a.object_name); });
    if (it == sample.objects.end()) {
      warnings.push_back("no annotated object named '" + a.object_name + "'; spotter box kept");
    } else {
      a.bbox = it->bbox;
    }
  }
}

VariantImage guardian_intervene(const Sample& sample, const RgbImage& image,
                                const std::vector<RiskAssessment>& assessments, int k) {
  if (k < 0) throw ArgumentError("k must be non-negative");
  VariantImage v{image, {"guardian", sample.id, {}, std::nullopt}};
  v.provenance.params["k"] = std::to_string(k);
  if (assessments.empty()) {
    v.provenance.params["no_assessments"] = "true";
    v.provenance.params["markers"] = "";
    return v;
  }
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(k), assessments.size());
  std::vector<MarkerSpec> rings;
  std::vector<std::string> names, scores, colors;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = assessments[i];
    const MarkerColor c = marker_for_score(a.score);
    rings.push_back(ring_for_bbox(a.bbox, c, image.width(), image.height()));
    names.push_back(a.object_name);
    scores.push_back(fmt_score(a.score));
    colors.emplace_back(to_string(c));
  }
  v.image = overlay_markers(image, rings);
  v.provenance.params["objects"] = join(names, ';');
  v.provenance.params["scores"] = join(scores, ';');
  v.provenance.params["colors"] = join(colors, ';');
  v.provenance.params["markers"] = encode_markers(rings);
  return v;
}

AttentionMap parse_attention_map(const json& j) {
  auto fail = [](const std::string& m) -> AttentionMap { throw ParseError("attention map: " + m); };
  if (!j.is_object()) return fail("expected a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "grid" && k != "image" && k != "values") return fail("unknown key '" + k + "'");
  }
  auto pair_of = [&](const char* key) -> std::pair<int, int> {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2 || !j[key][0].is_number_integer() ||
        !j[key][1].is_number_integer()) {
      fail(std::string("'") + key + "' must be a pair of integers");
    }
    return {j[key][0].get<int>(), j[key][1].get<int>()};
  };
  AttentionMap m;
  std::tie(m.grid_height, m.grid_width) = pair_of("grid");
  std::tie(m.image_width, m.image_height) = pair_of("image");
  if (m.grid_height <= 0 || m.grid_width <= 0) return fail("grid dimensions must be positive");
  if (m.image_width <= 0 || m.image_height <= 0) return fail("image dimensions must be positive");
  if (!j.contains("values") || !j["values"].is_array()) return fail("'values' must be an array");
  const auto& vals = j["values"];
  if (vals.size() != static_cast<std::size_t>(m.grid_height) * static_cast<std::size_t>(m.grid_width)) {
    return fail("expected " + std::to_string(m.grid_height * m.grid_width) + " values, got " +
                std::to_string(vals.size()));
  }
  m.values.reserve(vals.size());
  for (const auto& v : vals) {
    if (!v.is_number()) return fail("values must be numbers");
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < 0.0) return fail("values must be finite and non-negative");
    m.values.push_back(d);
  }
  return m;
}

AttentionMap load_attention_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read attention map: " + path.string());
  try {
    return parse_attention_map(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

json attention_map_to_json(const AttentionMap& map) {
  return {{"grid", {map.grid_height, map.grid_width}},
          {"image", {map.image_width, map.image_height}},
          {"values", map.values}};
}

EligibleAttentionMap suppress_borders(const AttentionMap& map, double margin_frac) {
  if (!(margin_frac >= 0.0 && margin_frac < 0.5)) throw ArgumentError("border margin must lie in [0, 0.5)");
  EligibleAttentionMap out{map, {}, margin_frac};
  const int mr = static_cast<int>(std::floor(margin_frac * map.grid_height));
  const int mc = static_cast<int>(std::floor(margin_frac * map.grid_width));
  out.eligible.resize(map.values.size());
  bool any = false;
  for (int r = 0; r < map.grid_height; ++r) {
    for (int c = 0; c < map.grid_width; ++c) {
      const bool ok = r >= mr && r < map.grid_height - mr && c >= mc && c < map.grid_width - mc;
      out.eligible[static_cast<std::size_t>(r * map.grid_width + c)] = ok;
      any = any || ok;
    }
  }
  if (!any) throw SuppressionError("border margin leaves no eligible attention cells");
  return out;
}

std::string_view to_string(RegionKind k) { return k == RegionKind::Hot ? "hot" : "cold"; }

RegionSelection select_attention_regions(const EligibleAttentionMap& em, int k, RegionKind kind,
                                         int exclusion_radius) {
  if (k < 1) throw ArgumentError("k must be at least 1");
  const AttentionMap& m = em.map;
  std::vector<Cell> candidates;
  for (int r = 0; r < m.grid_height; ++r)
    for (int c = 0; c < m.grid_width; ++c)
      if (em.is_eligible(r, c)) candidates.push_back({r, c});
  if (candidates.empty()) throw SelectionError("no eligible attention cells");

  std::stable_sort(candidates.begin(), candidates.end(), [&](const Cell& a, const Cell& b) {
    const double va = m.at(a.row, a.col), vb = m.at(b.row, b.col);
    return kind == RegionKind::Hot ? va > vb : va < vb;
  });

  RegionSelection sel;
  sel.kind = kind;
  for (const Cell& c : candidates) {
    if (static_cast<int>(sel.cells.size()) == k) break;
    const bool blocked = std::any_of(sel.cells.begin(), sel.cells.end(),
                                     [&](const Cell& s) { return chebyshev(s, c) < exclusion_radius; });
    if (blocked) continue;
    sel.cells.push_back(c);
    sel.pixel_centers.emplace_back((c.col + 0.5) * m.image_width / m.grid_width,
                                   (c.row + 0.5) * m.image_height / m.grid_height);
  }
  return sel;
}

std::string_view to_string(AuditorVariant v) {
  switch (v) {
    case AuditorVariant::HotRed: return "hot_red";
    case AuditorVariant::ColdRed: return "cold_red";
    case AuditorVariant::HotWhite: return "hot_white";
  }
  return "?";
}

AuditorVariant parse_auditor_variant(std::string_view s) {
  for (auto v : {AuditorVariant::HotRed, AuditorVariant::ColdRed, AuditorVariant::HotWhite})
    if (s == to_string(v)) return v;
  throw ArgumentError("unknown auditor variant '" + std::string(s) + "'");
}

VariantImage auditor_intervene(const Sample& sample, const RgbImage& image, const AttentionMap& map,
                               AuditorVariant variant, int k, double margin_frac) {
  if (map.image_width != image.width() || map.image_height != image.height()) {
    throw ArgumentError("attention map was computed for a " + std::to_string(map.image_width) + "x" +
                        std::to_string(map.image_height) + " image, sample image is " +
                        std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  const auto eligible = suppress_borders(map, margin_frac);
  const RegionKind kind = variant == AuditorVariant::ColdRed ? RegionKind::Cold : RegionKind::Hot;
  const auto sel = select_attention_regions(eligible, k, kind);
  const MarkerColor color = variant == AuditorVariant::HotWhite ? MarkerColor::White : MarkerColor::Red;
  const int radius = decoy_radius(image.width(), image.height());
  const int stroke = default_stroke(image.width(), image.height());

  std::vector<MarkerSpec> rings;
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < sel.cells.size(); ++i) {
    const auto [x, y] = sel.pixel_centers[i];
    rings.push_back({color, static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)), radius, stroke, false});
    cells.push_back(std::to_string(sel.cells[i].row) + "," + std::to_string(sel.cells[i].col));
  }
  VariantImage v{overlay_markers(image, rings), {"auditor", sample.id, {}, std::nullopt}};
  v.provenance.params["variant"] = std::string(to_string(variant));
  v.provenance.params["cells"] = join(cells, ';');
  std::ostringstream margin;
  margin << margin_frac;
  v.provenance.params["margin"] = margin.str();
  v.provenance.params["markers"] = encode_markers(rings);
  return v;
}

VariantImage attacker_intervene(const Sample& sample, const RgbImage& image, const AnnotatedObject& main_object,
                                const std::vector<AnnotatedObject>& background, const AttackerOptions& options) {
  const auto* found = sample.find_object(main_object.name);
  if (!found || !(*found == main_object)) {
    throw ArgumentError("main object '" + main_object.name + "' is not annotated in sample " + sample.id);
  }
  if (main_object.role != ObjectRole::TaskRelevant) {
    throw ArgumentError("main object '" + main_object.name + "' must have role task_relevant");
  }
  for (const auto& b : background) {
    if (b.bbox.intersects(main_object.bbox)) {
      throw ArgumentError("background object '" + b.name + "' overlaps the main object");
    }
  }
  if (options.distractor_count < 0) throw ArgumentError("distractor count must be non-negative");

  std::vector<AnnotatedObject> pool = background;
  if (options.shuffle_seed) {
    SeededRng rng(*options.shuffle_seed);
    for (std::size_t i = pool.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(i) - 1));
      std::swap(pool[i - 1], pool[j]);
    }
  }

  std::vector<MarkerSpec> rings;
  MarkerSpec cloak = ring_for_bbox(main_object.bbox, MarkerColor::White, image.width(), image.height());
  cloak.filled = options.cloak_filled;
  rings.push_back(cloak);
  std::vector<std::string> targets;
  const std::size_t n = std::min(pool.size(), static_cast<std::size_t>(options.distractor_count));
  for (std::size_t i = 0; i < n; ++i) {
    rings.push_back(ring_for_bbox(pool[i].bbox, MarkerColor::Red, image.width(), image.height()));
    targets.push_back(pool[i].name);
  }

  VariantImage v{overlay_markers(image, rings), {"attacker", sample.id, {}, options.shuffle_seed}};
  v.provenance.params["main"] = main_object.name;
  v.provenance.params["distractors"] = join(targets, ';');
  v.provenance.params["cloak"] = options.cloak_filled ? "filled" : "ring";
  if (background.empty()) v.provenance.params["no_distractors"] = "true";
  v.provenance.params["markers"] = encode_markers(rings);
  return v;
}

}  // namespace semsteer
