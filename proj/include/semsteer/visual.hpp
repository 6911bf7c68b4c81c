#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "semsteer/dataset.hpp"
#include "semsteer/marker_color.hpp"
#include "semsteer/raster.hpp"

namespace semsteer {

struct MarkerSpec {
  MarkerColor color = MarkerColor::Red;
  int cx = 0, cy = 0;
  int radius = 1;
  int stroke_width = 1;
  bool filled = false;
  friend bool operator==(const MarkerSpec&, const MarkerSpec&) = default;
};

struct Provenance {
  std::string variant_kind;
  std::string base_sample_id;
  std::map<std::string, std::string> params;
  std::optional<std::uint64_t> seed;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct VariantImage {
  RgbImage image;
  Provenance provenance;
};

// Pixels are painted when |d - radius| <= stroke/2 (ring) or d <= radius
// (filled), d being the Euclidean distance between pixel and center
// coordinates. The test is evaluated exactly in integers. Off-canvas parts
// are clipped; markers are composited in list order.
RgbImage overlay_markers(const RgbImage& image, const std::vector<MarkerSpec>& markers);
void validate_marker(const MarkerSpec& m, int image_width, int image_height);

// Stroke used by every automatically placed ring: max(3, round(1% of min side)).
int default_stroke(int image_width, int image_height);

// Ring circumscribing a box: center = box center, radius =
// max(8, ceil(0.55 * longest side)), never smaller than the stroke.
MarkerSpec ring_for_bbox(const BBox& box, MarkerColor color, int image_width, int image_height);

// Compact marker list encoding used in provenance params, e.g.
// "Red@100,100,r55,s3,ring;White@20,20,r8,s3,disk".
std::string encode_markers(const std::vector<MarkerSpec>& markers);
std::vector<MarkerSpec> decode_markers(const std::string& text);

VariantImage derive_color_variant(const Sample& sample, const RgbImage& image,
                                  const AnnotatedObject& target, MarkerColor color);

// bbox grown by round(padding_frac * side) on each side, clamped to the image.
BBox crop_region(const BBox& box, double padding_frac, int image_width, int image_height);
RgbImage crop_view(const RgbImage& image, const BBox& box, double padding_frac);
RgbImage crop_exact(const RgbImage& image, const BBox& region);

RgbImage mask_background(const RgbImage& image, const std::vector<BBox>& keep);

enum class ViewMode { Full, Crop, ABS, Masked };
enum class ViewRole { Global, Crop, Masked };

std::string_view to_string(ViewMode m);
std::string_view to_string(ViewRole r);
ViewMode parse_view_mode(std::string_view s);

struct View {
  ViewRole role;
  VariantImage image;
};
using ViewSet = std::vector<View>;

inline constexpr double kCropPadding = 0.1;

// `target` may be null for Full. Crop/ABS use the target box padded by 10%;
// Masked keeps the union of every annotated box in the sample.
ViewSet build_context_views(const Sample& sample, const RgbImage& image, ViewMode mode,
                            const AnnotatedObject* target);

enum class DistractorKind { DecoyCircles, NoisePatch, Sticker };
std::string_view to_string(DistractorKind k);
DistractorKind parse_distractor_kind(std::string_view s);

struct DistractorParams {
  std::optional<std::string> text;
  std::optional<int> count;
  friend bool operator==(const DistractorParams&, const DistractorParams&) = default;
};

inline constexpr int kDefaultDecoyCount = 3;
inline constexpr int kMaxPlacementAttempts = 1000;

struct StickerLayout {
  BBox rect;
  int scale = 1;
  int text_x = 0, text_y = 0;
};
StickerLayout sticker_layout(int image_width, int image_height, std::size_t text_length);
int noise_patch_side(int image_width, int image_height);
int decoy_radius(int image_width, int image_height);

VariantImage apply_distractor(const Sample& sample, const RgbImage& image, DistractorKind kind,
                              const DistractorParams& params, std::uint64_t seed);

// Recomputes a variant raster from its provenance and the base image.
RgbImage replay_variant(const Provenance& provenance, const Sample& sample, const RgbImage& base);

// Replays a sequence of steps, each applied to the previous step's output.
RgbImage replay_chain(const std::vector<Provenance>& steps, const Sample& sample, const RgbImage& base);

}  // namespace semsteer
