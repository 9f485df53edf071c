#pragma once

#include "stancekit/corpus.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace stancekit {

struct PredictionRow {
    std::string id;
    std::string label;
    /// Per-label probabilities aligned with the task's label order.
    std::optional<std::vector<double>> scores;

    friend bool operator==(const PredictionRow &, const PredictionRow &) = default;
};

/// One model's outputs over one split; the interchange unit between the
/// trainer, the prompt baseline, the ensembler and the evaluator.
struct PredictionSet {
    std::string model_key;
    TaskId task = TaskId::A;
    Split split = Split::eval;
    std::vector<PredictionRow> rows;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const PredictionSet &, const PredictionSet &) = default;
};

/// Throws InvalidArgument on duplicate ids, labels outside the label set,
/// or score vectors that are not on the probability simplex (1e-6).
void validate(const PredictionSet &set, const TaskSpec &task);

/// Sidecar path holding model_key/task/split/metadata: `<path>.meta.json`.
[[nodiscard]] std::filesystem::path metadata_path(const std::filesystem::path &predictions);

/// JSON-lines `{"id":..,"label":..,"scores":{label:p,..}}` plus sidecar.
void write_predictions(const std::filesystem::path &path, const PredictionSet &set, const TaskSpec &task);
[[nodiscard]] PredictionSet read_predictions(const std::filesystem::path &path);

}  // namespace stancekit
