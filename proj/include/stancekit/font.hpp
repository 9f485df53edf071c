#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace stancekit::font {

inline constexpr int glyph_width = 5;
inline constexpr int glyph_height = 7;
inline constexpr int advance = glyph_width + 1;

/// 5x7 bitmap, one row per byte, bit 4 = leftmost column. Lowercase letters
/// map to uppercase; unsupported characters render as '?'.
[[nodiscard]] std::array<std::uint8_t, glyph_height> glyph(char c) noexcept;

[[nodiscard]] constexpr int text_width(std::string_view s, int scale) noexcept {
    return s.empty() ? 0 : static_cast<int>(s.size()) * advance * scale - scale;
}

}  // namespace stancekit::font
