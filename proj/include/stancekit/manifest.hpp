#pragma once

#include "stancekit/config.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

[[nodiscard]] std::string sha256_hex(std::string_view data);
[[nodiscard]] std::string sha256_file(const std::filesystem::path &path);

/// UTC timestamp token such as 20261014T093000Z.
[[nodiscard]] std::string make_run_id();

/// One record per CLI invocation, appended as a JSON line.
struct RunManifest {
    std::string run_id;
    std::string subcommand;
    std::optional<std::string> task;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;   ///< path, sha256
    std::vector<std::string> artifacts;

    void add_input(const std::filesystem::path &path);
    [[nodiscard]] nlohmann::ordered_json to_json() const;
    /// Throws InvalidArgument if a listed artifact does not exist.
    void append_to(const std::filesystem::path &manifest_file) const;
};

/// sha256 over Config::canonical(), so layout and comments do not matter.
[[nodiscard]] std::string config_hash(const Config &cfg);

}  // namespace stancekit
