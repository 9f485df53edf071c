#pragma once

#include "stancekit/corpus.hpp"
#include "stancekit/random.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace stancekit::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("stancekit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    [[nodiscard]] const std::filesystem::path &path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path &p, const std::string &contents) {
    std::ofstream f(p, std::ios::binary);
    f << contents;
}

inline std::string read_file(const std::filesystem::path &p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline LabeledExample example(std::string id, std::string text, std::string label, Split split = Split::train) {
    LabeledExample e;
    e.id = std::move(id);
    e.text = std::move(text);
    e.label = std::move(label);
    e.split = split;
    return e;
}

/// Examples with the given per-label counts, texts built from a label-specific
/// vocabulary so a bag-of-words model can separate them.
inline std::vector<LabeledExample> separable_corpus(const TaskSpec &task, const std::vector<std::size_t> &counts, std::uint64_t seed,
                                                    Split split = Split::train, const std::string &id_prefix = "ex") {
    static const std::vector<std::vector<std::string>> vocab{
        {"sunny", "garden", "coffee", "friends", "music", "walk", "books", "smile"},
        {"vile", "scum", "filth", "disgusting", "vermin", "trash", "hateful", "rats"},
        {"policy", "council", "protest", "minister", "budget", "strike", "summit", "vote"},
    };
    Rng rng(seed);
    std::vector<LabeledExample> out;
    std::size_t n = 0;
    for (std::size_t label = 0; label < counts.size(); ++label) {
        for (std::size_t i = 0; i < counts[label]; ++i) {
            std::string text;
            for (int w = 0; w < 6; ++w) {
                const auto &words = vocab.at(label);
                text += (w == 0 ? "" : " ") + words[rng.below(words.size())];
            }
            out.push_back(example(id_prefix + std::to_string(n++), text, task.labels().at(label), split));
        }
    }
    rng.shuffle(out);
    return out;
}

}  // namespace stancekit::testing
