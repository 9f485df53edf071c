#include "stancekit/config.hpp"

#include "stancekit/error.hpp"
#include "stancekit/text.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace stancekit {

Config Config::parse(std::string_view contents) {
    Config cfg;
    std::size_t line_no = 0;
    for (const std::string &raw : text::split(contents, '\n')) {
        ++line_no;
        const std::string_view line = text::trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string_view key = text::trim(line.substr(0, eq));
        if (key.empty()) {
            throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
        }
        cfg.set(std::string(key), std::string(text::trim(line.substr(eq + 1))));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(std::string key, std::string value) {
    entries_.insert_or_assign(std::move(key), std::move(value));
}

bool Config::contains(std::string_view key) const {
    return entries_.find(key) != entries_.end();
}

std::optional<std::string> Config::get(std::string_view key) const {
    if (const auto it = entries_.find(key); it != entries_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::string Config::get_or(std::string_view key, std::string_view fallback) const {
    return get(key).value_or(std::string(fallback));
}

std::optional<double> Config::get_double(std::string_view key) const {
    const auto v = get(key);
    if (!v) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) {
            throw std::invalid_argument(*v);
        }
        return d;
    } catch (const std::exception &) {
        throw InvalidArgument("config key '" + std::string(key) + "' is not a number: " + *v);
    }
}

std::optional<long long> Config::get_int(std::string_view key) const {
    const auto v = get(key);
    if (!v) {
        return std::nullopt;
    }
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
        throw InvalidArgument("config key '" + std::string(key) + "' is not an integer: " + *v);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> Config::with_prefix(std::string_view prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto it = entries_.lower_bound(prefix); it != entries_.end() && it->first.rfind(prefix, 0) == 0; ++it) {
        out.emplace_back(it->first.substr(prefix.size()), it->second);
    }
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto &[k, v] : entries_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

}  // namespace stancekit
