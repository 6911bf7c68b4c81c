#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semsteer/dataset.hpp"
#include "semsteer/prompt.hpp"
#include "semsteer/visual.hpp"

namespace semsteer {

// ---- Guardian ---------------------------------------------------------------

struct RiskAssessment {
  std::string object_name;
  BBox bbox;
  double score = 0.0;  // in [0, 1]
};

// Red above 0.8, Orange in (0.4, 0.8], White at or below 0.4.
MarkerColor marker_for_score(double s);

struct SpotterResult {
  std::vector<RiskAssessment> assessments;  // score descending, then name ascending
  std::vector<std::string> warnings;
};

SpotterResult parse_spotter_output(std::string_view text, int image_width, int image_height);

Prompt render_spotter_prompt(std::string_view instruction, int image_width, int image_height, int k,
                             const TemplateStore& templates = TemplateStore::defaults());

// Replaces each assessment's box with the annotated box of the same-named
// object (case-insensitive). Unmatched assessments keep their box and add a
// warning.
void substitute_ground_truth_boxes(std::vector<RiskAssessment>& assessments, const Sample& sample,
                                   std::vector<std::string>& warnings);

inline constexpr int kDefaultTopK = 3;

VariantImage guardian_intervene(const Sample& sample, const RgbImage& image,
                                const std::vector<RiskAssessment>& assessments, int k = kDefaultTopK);

// ---- Auditor ----------------------------------------------------------------

struct AttentionMap {
  int grid_height = 0;
  int grid_width = 0;
  std::vector<double> values;  // row-major, grid_height * grid_width
  int image_width = 0;
  int image_height = 0;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row * grid_width + col)]; }
};

// {"grid": [h, w], "image": [W, H], "values": [...]}
AttentionMap parse_attention_map(const nlohmann::json& j);
AttentionMap load_attention_map(const std::filesystem::path& path);
nlohmann::json attention_map_to_json(const AttentionMap& map);

struct EligibleAttentionMap {
  AttentionMap map;
  std::vector<bool> eligible;  // row-major
  double margin_frac = 0.0;

  bool is_eligible(int row, int col) const {
    return eligible[static_cast<std::size_t>(row * map.grid_width + col)];
  }
};

inline constexpr double kDefaultBorderMargin = 0.10;

EligibleAttentionMap suppress_borders(const AttentionMap& map, double margin_frac);

enum class RegionKind { Hot, Cold };
std::string_view to_string(RegionKind k);

struct Cell {
  int row = 0, col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int chebyshev(const Cell& a, const Cell& b) {
  return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

struct RegionSelection {
  std::vector<Cell> cells;
  RegionKind kind = RegionKind::Hot;
  std::vector<std::pair<double, double>> pixel_centers;  // (x, y)
};

// Greedy over eligible cells sorted by value (descending for hot, ascending
// for cold), ties by (row, col); candidates closer than `exclusion_radius`
// (Chebyshev) to an already chosen cell are skipped.
RegionSelection select_attention_regions(const EligibleAttentionMap& map, int k, RegionKind kind,
                                         int exclusion_radius = 1);

enum class AuditorVariant { HotRed, ColdRed, HotWhite };
std::string_view to_string(AuditorVariant v);
AuditorVariant parse_auditor_variant(std::string_view s);

VariantImage auditor_intervene(const Sample& sample, const RgbImage& image, const AttentionMap& map,
                               AuditorVariant variant, int k = kDefaultTopK,
                               double margin_frac = kDefaultBorderMargin);

// ---- Attacker ---------------------------------------------------------------

struct AttackerOptions {
  bool cloak_filled = false;
  int distractor_count = 3;
  std::optional<std::uint64_t> shuffle_seed;  // shuffles the background list before picking
};

VariantImage attacker_intervene(const Sample& sample, const RgbImage& image, const AnnotatedObject& main_object,
                                const std::vector<AnnotatedObject>& background, const AttackerOptions& options = {});

}  // namespace semsteer
