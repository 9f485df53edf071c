#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

/// Flat `key = value` configuration. Lines starting with '#' are comments.
/// Later assignments to the same key win.
class Config {
public:
    Config() = default;

    [[nodiscard]] static Config parse(std::string_view contents);
    [[nodiscard]] static Config load(const std::filesystem::path &path);

    void set(std::string key, std::string value);
    [[nodiscard]] bool contains(std::string_view key) const;
    [[nodiscard]] std::optional<std::string> get(std::string_view key) const;
    [[nodiscard]] std::string get_or(std::string_view key, std::string_view fallback) const;
    [[nodiscard]] std::optional<double> get_double(std::string_view key) const;
    [[nodiscard]] std::optional<long long> get_int(std::string_view key) const;

    /// Keys starting with `prefix`, in sorted order, with the prefix removed.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> with_prefix(std::string_view prefix) const;

    [[nodiscard]] const std::map<std::string, std::string, std::less<>> &entries() const noexcept { return entries_; }

    /// Sorted `key=value\n` lines; independent of file layout and comments.
    [[nodiscard]] std::string canonical() const;

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

}  // namespace stancekit
