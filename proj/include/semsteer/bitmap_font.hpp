#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace semsteer::font {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphSpacing = 1;

// Seven rows, bit 4 is the leftmost column. Covers 'A'-'Z' and ' '.
using Glyph = std::array<std::uint8_t, kGlyphHeight>;

std::optional<Glyph> glyph(char c);

inline bool pixel(const Glyph& g, int col, int row) {
  return (g[static_cast<std::size_t>(row)] >> (kGlyphWidth - 1 - col)) & 1U;
}

}  // namespace semsteer::font
