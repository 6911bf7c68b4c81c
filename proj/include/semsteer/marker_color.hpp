#pragma once

#include <array>
#include <string_view>

#include "semsteer/raster.hpp"

namespace semsteer {

enum class MarkerColor { Red, Orange, Yellow, Green, White };

inline constexpr std::array<MarkerColor, 5> kAllMarkerColors = {
    MarkerColor::Red, MarkerColor::Orange, MarkerColor::Yellow, MarkerColor::Green, MarkerColor::White};

constexpr Rgb marker_rgb(MarkerColor c) {
  switch (c) {
    case MarkerColor::Red: return {255, 0, 0};
    case MarkerColor::Orange: return {255, 165, 0};
    case MarkerColor::Yellow: return {255, 255, 0};
    case MarkerColor::Green: return {0, 200, 0};
    case MarkerColor::White: return {255, 255, 255};
  }
  return {};
}

// Red=4 ... White=0; higher means a stronger danger connotation.
constexpr int danger_rank(MarkerColor c) {
  switch (c) {
    case MarkerColor::Red: return 4;
    case MarkerColor::Orange: return 3;
    case MarkerColor::Yellow: return 2;
    case MarkerColor::Green: return 1;
    case MarkerColor::White: return 0;
  }
  return 0;
}

// Capitalized name as used in config files ("Red").
std::string_view to_string(MarkerColor c);
// Lowercase color word as it appears in prompts ("red").
std::string_view color_word(MarkerColor c);
// Accepts either capitalization.
MarkerColor parse_marker_color(std::string_view s);

}  // namespace semsteer
