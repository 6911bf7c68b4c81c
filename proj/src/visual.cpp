#include "semsteer/visual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "semsteer/bitmap_font.hpp"
#include "semsteer/errors.hpp"
#include "semsteer/rng.hpp"

namespace semsteer {

std::string_view to_string(MarkerColor c) {
  switch (c) {
    case MarkerColor::Red: return "Red";
    case MarkerColor::Orange: return "Orange";
    case MarkerColor::Yellow: return "Yellow";
    case MarkerColor::Green: return "Green";
    case MarkerColor::White: return "White";
  }
  return "?";
}

std::string_view color_word(MarkerColor c) {
  switch (c) {
    case MarkerColor::Red: return "red";
    case MarkerColor::Orange: return "orange";
    case MarkerColor::Yellow: return "yellow";
    case MarkerColor::Green: return "green";
    case MarkerColor::White: return "white";
  }
  return "?";
}

MarkerColor parse_marker_color(std::string_view s) {
  for (MarkerColor c : kAllMarkerColors) {
    if (s == to_string(c) || s == color_word(c)) return c;
  }
  throw ArgumentError("unknown marker color '" + std::string(s) + "'");
}

namespace {

std::string box_string(const BBox& b) {
  return std::to_string(b.x1) + "," + std::to_string(b.y1) + "," + std::to_string(b.x2) + "," +
         std::to_string(b.y2);
}

BBox parse_box(const std::string& s) {
  BBox b;
  char c1, c2, c3;
  std::istringstream in(s);
  if (!(in >> b.x1 >> c1 >> b.y1 >> c2 >> b.x2 >> c3 >> b.y2) || c1 != ',' || c2 != ',' || c3 != ',') {
    throw ArgumentError("malformed box '" + s + "'");
  }
  return b;
}

std::string boxes_string(const std::vector<BBox>& boxes) {
  std::string out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out += ';';
    out += box_string(boxes[i]);
  }
  return out;
}

std::vector<BBox> parse_boxes(const std::string& s) {
  std::vector<BBox> out;
  std::size_t start = 0;
  while (start < s.size()) {
    auto end = s.find(';', start);
    if (end == std::string::npos) end = s.size();
    out.push_back(parse_box(s.substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

const std::string& required_param(const Provenance& p, const std::string& key) {
  auto it = p.params.find(key);
  if (it == p.params.end()) {
    throw ArgumentError("provenance of kind '" + p.variant_kind + "' lacks param '" + key + "'");
  }
  return it->second;
}

int round_percent(int value, int percent) { return (value * percent + 50) / 100; }

void check_target_in_sample(const Sample& sample, const AnnotatedObject& target) {
  const auto* found = sample.find_object(target.name);
  if (!found || !(*found == target)) {
    throw ArgumentError("object '" + target.name + "' is not annotated in sample " + sample.id);
  }
}

Provenance base_provenance(const Sample& sample, std::string kind) {
  Provenance p;
  p.variant_kind = std::move(kind);
  p.base_sample_id = sample.id;
  return p;
}

}  // namespace

void validate_marker(const MarkerSpec& m, int image_width, int image_height) {
  if (m.radius <= 0) throw ArgumentError("marker radius must be positive");
  if (m.stroke_width <= 0) throw ArgumentError("marker stroke width must be positive");
  if (m.radius < m.stroke_width) throw ArgumentError("marker radius must be at least the stroke width");
  if (m.radius > std::max(image_width, image_height)) {
    throw ArgumentError("marker radius exceeds the larger image dimension");
  }
}

RgbImage overlay_markers(const RgbImage& image, const std::vector<MarkerSpec>& markers) {
  for (const auto& m : markers) validate_marker(m, image.width(), image.height());
  RgbImage out = image;
  for (const auto& m : markers) {
    const std::int64_t r = m.radius;
    const std::int64_t s = m.stroke_width;
    const std::int64_t inner = (2 * r - s) * (2 * r - s);
    const std::int64_t outer = (2 * r + s) * (2 * r + s);
    const std::int64_t extent = m.filled ? r : (2 * r + s) / 2;
    const Rgb color = marker_rgb(m.color);
    const int y0 = static_cast<int>(std::max<std::int64_t>(0, m.cy - extent));
    const int y1 = static_cast<int>(std::min<std::int64_t>(out.height() - 1, m.cy + extent));
    const int x0 = static_cast<int>(std::max<std::int64_t>(0, m.cx - extent));
    const int x1 = static_cast<int>(std::min<std::int64_t>(out.width() - 1, m.cx + extent));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::int64_t dx = x - m.cx, dy = y - m.cy;
        const std::int64_t d2 = dx * dx + dy * dy;
        const bool hit = m.filled ? d2 <= r * r : (4 * d2 >= inner && 4 * d2 <= outer);
        if (hit) out.set(x, y, color);
      }
    }
  }
  return out;
}

int default_stroke(int image_width, int image_height) {
  return std::max(3, round_percent(std::min(image_width, image_height), 1));
}

MarkerSpec ring_for_bbox(const BBox& box, MarkerColor color, int image_width, int image_height) {
  MarkerSpec m;
  m.color = color;
  m.cx = (box.x1 + box.x2) / 2;
  m.cy = (box.y1 + box.y2) / 2;
  const int longest = std::max(box.width(), box.height());
  m.stroke_width = default_stroke(image_width, image_height);
  m.radius = std::max({8, (55 * longest + 99) / 100, m.stroke_width});
  m.radius = std::min(m.radius, std::max(image_width, image_height));
  return m;
}

std::string encode_markers(const std::vector<MarkerSpec>& markers) {
  std::string out;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const auto& m = markers[i];
    if (i) out += ';';
    out += std::string(to_string(m.color)) + "@" + std::to_string(m.cx) + "," + std::to_string(m.cy) +
           ",r" + std::to_string(m.radius) + ",s" + std::to_string(m.stroke_width) + "," +
           (m.filled ? "disk" : "ring");
  }
  return out;
}

std::vector<MarkerSpec> decode_markers(const std::string& text) {
  std::vector<MarkerSpec> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(';', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    const auto at = item.find('@');
    if (at == std::string::npos) throw ArgumentError("malformed marker '" + item + "'");
    MarkerSpec m;
    m.color = parse_marker_color(item.substr(0, at));
    char fill[8] = {};
    if (std::sscanf(item.c_str() + at + 1, "%d,%d,r%d,s%d,%4s", &m.cx, &m.cy, &m.radius, &m.stroke_width,
                    fill) != 5) {
      throw ArgumentError("malformed marker '" + item + "'");
    }
    const std::string f(fill);
    if (f != "ring" && f != "disk") throw ArgumentError("malformed marker '" + item + "'");
    m.filled = f == "disk";
    out.push_back(m);
    start = end + 1;
  }
  return out;
}

VariantImage derive_color_variant(const Sample& sample, const RgbImage& image,
                                  const AnnotatedObject& target, MarkerColor color) {
  check_target_in_sample(sample, target);
  const MarkerSpec ring = ring_for_bbox(target.bbox, color, image.width(), image.height());
  VariantImage v{overlay_markers(image, {ring}), base_provenance(sample, "color_variant")};
  v.provenance.params["color"] = std::string(to_string(color));
  v.provenance.params["object"] = target.name;
  v.provenance.params["markers"] = encode_markers({ring});
  return v;
}

BBox crop_region(const BBox& box, double padding_frac, int image_width, int image_height) {
  if (padding_frac < 0) throw ArgumentError("padding fraction must be non-negative");
  const int px = static_cast<int>(std::lround(padding_frac * box.width()));
  const int py = static_cast<int>(std::lround(padding_frac * box.height()));
  return {std::max(0, box.x1 - px), std::max(0, box.y1 - py), std::min(image_width, box.x2 + px),
          std::min(image_height, box.y2 + py)};
}

RgbImage crop_exact(const RgbImage& image, const BBox& region) {
  if (region.x1 < 0 || region.y1 < 0 || region.x2 > image.width() || region.y2 > image.height() ||
      region.x1 >= region.x2 || region.y1 >= region.y2) {
    throw ArgumentError("crop region " + box_string(region) + " is not inside the image");
  }
  RgbImage out(region.width(), region.height());
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) out.set(x, y, image.at(region.x1 + x, region.y1 + y));
  return out;
}

RgbImage crop_view(const RgbImage& image, const BBox& box, double padding_frac) {
  return crop_exact(image, crop_region(box, padding_frac, image.width(), image.height()));
}

RgbImage mask_background(const RgbImage& image, const std::vector<BBox>& keep) {
  for (const auto& b : keep) {
    if (b.x1 < 0 || b.y1 < 0 || b.x2 > image.width() || b.y2 > image.height()) {
      throw ArgumentError("keep box " + box_string(b) + " is not inside the image");
    }
  }
  RgbImage out(image.width(), image.height());
  for (const auto& b : keep)
    for (int y = b.y1; y < b.y2; ++y)
      for (int x = b.x1; x < b.x2; ++x) out.set(x, y, image.at(x, y));
  return out;
}

std::string_view to_string(ViewMode m) {
  switch (m) {
    case ViewMode::Full: return "Full";
    case ViewMode::Crop: return "Crop";
    case ViewMode::ABS: return "ABS";
    case ViewMode::Masked: return "Masked";
  }
  return "?";
}

std::string_view to_string(ViewRole r) {
  switch (r) {
    case ViewRole::Global: return "global";
    case ViewRole::Crop: return "crop";
    case ViewRole::Masked: return "masked";
  }
  return "?";
}

ViewMode parse_view_mode(std::string_view s) {
  for (ViewMode m : {ViewMode::Full, ViewMode::Crop, ViewMode::ABS, ViewMode::Masked}) {
    if (s == to_string(m)) return m;
  }
  throw ArgumentError("unknown view mode '" + std::string(s) + "'");
}

ViewSet build_context_views(const Sample& sample, const RgbImage& image, ViewMode mode,
                            const AnnotatedObject* target) {
  auto global = [&] {
    return View{ViewRole::Global, {image, base_provenance(sample, "view_global")}};
  };
  auto crop = [&] {
    const BBox region = crop_region(target->bbox, kCropPadding, image.width(), image.height());
    View v{ViewRole::Crop, {crop_exact(image, region), base_provenance(sample, "view_crop")}};
    v.image.provenance.params["region"] = box_string(region);
    v.image.provenance.params["object"] = target->name;
    return v;
  };

  if (mode == ViewMode::Full) return {global()};
  if (!target) {
    throw MissingAnnotationError("view mode " + std::string(to_string(mode)) + " needs an annotated target in " +
                                 sample.id);
  }
  check_target_in_sample(sample, *target);
  switch (mode) {
    case ViewMode::Crop: return {crop()};
    case ViewMode::ABS: return {global(), crop()};
    case ViewMode::Masked: {
      std::vector<BBox> keep;
      for (const auto& o : sample.objects) keep.push_back(o.bbox);
      View v{ViewRole::Masked, {mask_background(image, keep), base_provenance(sample, "view_masked")}};
      v.image.provenance.params["keep"] = boxes_string(keep);
      return {v};
    }
    case ViewMode::Full: break;
  }
  return {global()};
}

std::string_view to_string(DistractorKind k) {
  switch (k) {
    case DistractorKind::DecoyCircles: return "decoy_circles";
    case DistractorKind::NoisePatch: return "noise_patch";
    case DistractorKind::Sticker: return "sticker";
  }
  return "?";
}

DistractorKind parse_distractor_kind(std::string_view s) {
  for (auto k : {DistractorKind::DecoyCircles, DistractorKind::NoisePatch, DistractorKind::Sticker}) {
    if (s == to_string(k)) return k;
  }
  throw ArgumentError("unknown distractor kind '" + std::string(s) + "'");
}

StickerLayout sticker_layout(int image_width, int image_height, std::size_t text_length) {
  StickerLayout l;
  const int x0 = round_percent(image_width, 2);
  const int y0 = round_percent(image_height, 2);
  const int n = static_cast<int>(text_length);
  const int text_w = n > 0 ? n * font::kGlyphWidth + (n - 1) * font::kGlyphSpacing : 0;
  // Small images: grow the sticker so scale-1 text still fits.
  const int w = std::max({1, round_percent(image_width, 28), text_w + 4});
  const int h = std::max({1, round_percent(image_height, 10), font::kGlyphHeight + 4});
  l.rect = {x0, y0, std::min(image_width, x0 + w), std::min(image_height, y0 + h)};
  // 1 px border plus 1 px padding on every side.
  const int avail_w = l.rect.width() - 4;
  const int avail_h = l.rect.height() - 4;
  l.scale = 1;
  if (text_w > 0 && avail_w > 0 && avail_h > 0) {
    l.scale = std::max(1, std::min(avail_w / text_w, avail_h / font::kGlyphHeight));
  }
  l.text_x = l.rect.x1 + (l.rect.width() - text_w * l.scale) / 2;
  l.text_y = l.rect.y1 + (l.rect.height() - font::kGlyphHeight * l.scale) / 2;
  return l;
}

int noise_patch_side(int image_width, int image_height) {
  return std::max(1, round_percent(std::min(image_width, image_height), 15));
}

int decoy_radius(int image_width, int image_height) {
  return std::max(default_stroke(image_width, image_height), round_percent(std::min(image_width, image_height), 8));
}

namespace {

RgbImage draw_sticker(const RgbImage& image, const std::string& text) {
  for (char c : text) {
    if (!font::glyph(c)) throw ArgumentError("sticker text supports only 'A'-'Z' and spaces: '" + text + "'");
  }
  RgbImage out = image;
  const StickerLayout l = sticker_layout(image.width(), image.height(), text.size());
  const BBox& r = l.rect;
  for (int y = r.y1; y < r.y2; ++y) {
    for (int x = r.x1; x < r.x2; ++x) {
      const bool border = x == r.x1 || x == r.x2 - 1 || y == r.y1 || y == r.y2 - 1;
      out.set(x, y, border ? Rgb{0, 0, 0} : Rgb{255, 255, 255});
    }
  }
  const int advance = (font::kGlyphWidth + font::kGlyphSpacing) * l.scale;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto g = *font::glyph(text[i]);
    const int gx = l.text_x + static_cast<int>(i) * advance;
    for (int row = 0; row < font::kGlyphHeight * l.scale; ++row) {
      for (int col = 0; col < font::kGlyphWidth * l.scale; ++col) {
        if (!font::pixel(g, col / l.scale, row / l.scale)) continue;
        const int x = gx + col, y = l.text_y + row;
        if (x > r.x1 && x < r.x2 - 1 && y > r.y1 && y < r.y2 - 1) out.set(x, y, {0, 0, 0});
      }
    }
  }
  return out;
}

// Squared distance from (cx, cy) to the nearest pixel of the box.
std::int64_t box_distance2(const BBox& b, std::int64_t cx, std::int64_t cy) {
  const std::int64_t nx = std::clamp<std::int64_t>(cx, b.x1, b.x2 - 1);
  const std::int64_t ny = std::clamp<std::int64_t>(cy, b.y1, b.y2 - 1);
  return (cx - nx) * (cx - nx) + (cy - ny) * (cy - ny);
}

std::vector<MarkerSpec> place_decoys(const Sample& sample, int w, int h, int count, std::uint64_t seed) {
  const int radius = decoy_radius(w, h);
  const int stroke = default_stroke(w, h);
  const std::int64_t extent = (2 * radius + stroke) / 2;
  const auto avoid = sample.objects_with_role(ObjectRole::TaskRelevant);
  // Keep rings fully on canvas when the canvas is large enough.
  const std::int64_t lo_x = (w - 1 >= 2 * extent) ? extent : 0, hi_x = (w - 1 >= 2 * extent) ? w - 1 - extent : w - 1;
  const std::int64_t lo_y = (h - 1 >= 2 * extent) ? extent : 0, hi_y = (h - 1 >= 2 * extent) ? h - 1 - extent : h - 1;

  SeededRng rng(seed);
  std::vector<MarkerSpec> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (attempts++ >= kMaxPlacementAttempts) {
      throw PlacementError("could not place " + std::to_string(count) + " decoy circles clear of task objects in " +
                           sample.id + " within " + std::to_string(kMaxPlacementAttempts) + " attempts");
    }
    const auto cx = rng.uniform(lo_x, hi_x);
    const auto cy = rng.uniform(lo_y, hi_y);
    const bool clear = std::all_of(avoid.begin(), avoid.end(), [&](const AnnotatedObject* o) {
      return box_distance2(o->bbox, cx, cy) > extent * extent;
    });
    if (clear) {
      out.push_back({MarkerColor::Red, static_cast<int>(cx), static_cast<int>(cy), radius, stroke, false});
    }
  }
  return out;
}

}  // namespace

VariantImage apply_distractor(const Sample& sample, const RgbImage& image, DistractorKind kind,
                              const DistractorParams& params, std::uint64_t seed) {
  VariantImage v{{}, base_provenance(sample, std::string(to_string(kind)))};
  v.provenance.seed = seed;
  const int w = image.width(), h = image.height();
  switch (kind) {
    case DistractorKind::DecoyCircles: {
      const int count = params.count.value_or(kDefaultDecoyCount);
      if (count < 0) throw ArgumentError("decoy count must be non-negative");
      const auto decoys = place_decoys(sample, w, h, count, seed);
      v.image = overlay_markers(image, decoys);
      v.provenance.params["count"] = std::to_string(count);
      v.provenance.params["markers"] = encode_markers(decoys);
      break;
    }
    case DistractorKind::NoisePatch: {
      const int side = std::min({noise_patch_side(w, h), w, h});
      SeededRng rng(seed);
      const int px = static_cast<int>(rng.uniform(0, w - side));
      const int py = static_cast<int>(rng.uniform(0, h - side));
      v.image = image;
      for (int y = py; y < py + side; ++y) {
        for (int x = px; x < px + side; ++x) {
          const auto r = rng.byte(), g = rng.byte(), b = rng.byte();
          v.image.set(x, y, {r, g, b});
        }
      }
      v.provenance.params["region"] = box_string({px, py, px + side, py + side});
      break;
    }
    case DistractorKind::Sticker: {
      if (!params.text || params.text->empty()) throw ArgumentError("sticker distractor requires params.text");
      v.image = draw_sticker(image, *params.text);
      v.provenance.params["text"] = *params.text;
      break;
    }
  }
  if (params.text && kind != DistractorKind::Sticker) v.provenance.params["text"] = *params.text;
  return v;
}

RgbImage replay_variant(const Provenance& p, const Sample& sample, const RgbImage& base) {
  const std::string& kind = p.variant_kind;
  if (kind == "view_global" || kind == "identity") return base;
  if (kind == "view_crop") return crop_exact(base, parse_box(required_param(p, "region")));
  if (kind == "view_masked") {
    const auto it = p.params.find("keep");
    return mask_background(base, it == p.params.end() ? std::vector<BBox>{} : parse_boxes(it->second));
  }
  if (kind == "decoy_circles" || kind == "noise_patch" || kind == "sticker") {
    if (!p.seed) throw ArgumentError("distractor provenance lacks a seed");
    DistractorParams dp;
    if (auto it = p.params.find("text"); it != p.params.end()) dp.text = it->second;
    if (auto it = p.params.find("count"); it != p.params.end()) dp.count = std::stoi(it->second);
    return apply_distractor(sample, base, parse_distractor_kind(kind), dp, *p.seed).image;
  }
  // Every marker-painting variant (color sweeps and the pipelines) records
  // its rings explicitly.
  if (auto it = p.params.find("markers"); it != p.params.end()) {
    return overlay_markers(base, decode_markers(it->second));
  }
  throw ArgumentError("cannot replay variant kind '" + kind + "'");
}

RgbImage replay_chain(const std::vector<Provenance>& steps, const Sample& sample, const RgbImage& base) {
  RgbImage current = base;
  for (const auto& step : steps) current = replay_variant(step, sample, current);
  return current;
}

}  // namespace semsteer
