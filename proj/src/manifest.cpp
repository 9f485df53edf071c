#include "stancekit/manifest.hpp"

#include "stancekit/error.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

namespace stancekit {

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256 init failed");
        }
    }
    void update(const char *data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
        static constexpr char digits[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(digits[md[i] >> 4U]);
            out.push_back(digits[md[i] & 0xFU]);
        }
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX *)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.hex();
}

std::string sha256_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    Sha256 h;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

std::string make_run_id() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y%m%dT%H%M%SZ", &tm);
    return buf.data();
}

void RunManifest::add_input(const std::filesystem::path &path) {
    inputs.emplace_back(path.string(), sha256_file(path));
}

nlohmann::ordered_json RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["run_id"] = run_id;
    j["subcommand"] = subcommand;
    j["task"] = task ? nlohmann::ordered_json(*task) : nlohmann::ordered_json(nullptr);
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    nlohmann::ordered_json in = nlohmann::ordered_json::array();
    for (const auto &[p, d] : inputs) {
        in.push_back({{"path", p}, {"sha256", d}});
    }
    j["inputs"] = std::move(in);
    j["artifacts"] = artifacts;
    return j;
}

void RunManifest::append_to(const std::filesystem::path &manifest_file) const {
    for (const auto &a : artifacts) {
        if (!std::filesystem::exists(a)) {
            throw InvalidArgument("manifest artifact does not exist: " + a);
        }
    }
    if (manifest_file.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(manifest_file.parent_path(), ec);
    }
    std::ofstream out(manifest_file, std::ios::binary | std::ios::app);
    if (!out) {
        throw UnwritablePath(manifest_file.string());
    }
    out << to_json().dump() << '\n';
}

std::string config_hash(const Config &cfg) {
    return sha256_hex(cfg.canonical());
}

}  // namespace stancekit
