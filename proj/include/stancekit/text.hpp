#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit::text {

[[nodiscard]] std::string_view trim(std::string_view s) noexcept;
/// ASCII-only lowercase; bytes >= 0x80 pass through untouched.
[[nodiscard]] std::string to_lower(std::string_view s);
[[nodiscard]] std::string to_upper(std::string_view s);
[[nodiscard]] bool iequals(std::string_view a, std::string_view b) noexcept;
/// Lowercase, trim and collapse internal whitespace runs.
[[nodiscard]] std::string casefold(std::string_view s);
[[nodiscard]] std::vector<std::string> split(std::string_view s, char sep);
[[nodiscard]] std::string join(const std::vector<std::string> &parts, std::string_view sep);
[[nodiscard]] std::uint64_t fnv1a64(std::string_view s) noexcept;

}  // namespace stancekit::text
