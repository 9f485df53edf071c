#pragma once

#include "stancekit/corpus.hpp"
#include "stancekit/predictions.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stancekit {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

/// Scores of one prediction set against gold labels.
///
/// Classes with no predictions get precision 0, classes with no gold
/// support get recall 0, and f1 is 0 whenever precision + recall is 0. Every
/// class of the task contributes to the macro average.
struct MetricsReport {
    std::string model_key;
    Split split = Split::eval;
    bool augmented = false;
    std::vector<std::string> labels;
    std::vector<ClassMetrics> per_class;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
    /// confusion[gold][predicted]
    std::vector<std::vector<std::size_t>> confusion;
    std::size_t total = 0;

    [[nodiscard]] nlohmann::ordered_json to_json() const;
    [[nodiscard]] static MetricsReport from_json(const nlohmann::json &j);
};

/// Core scorer over label indices; gold and pred must have equal length.
[[nodiscard]] MetricsReport score_indices(std::span<const std::size_t> gold, std::span<const std::size_t> pred, const TaskSpec &task);

/// Joins predictions to gold by example id. Throws UnlabeledGold when any gold
/// row lacks a label and ExampleUniverseMismatch when the id sets differ.
[[nodiscard]] MetricsReport score(std::span<const LabeledExample> gold, const PredictionSet &pred, const TaskSpec &task);

/// Half-up rounding to two decimals, e.g. 0.885 -> "0.89".
[[nodiscard]] std::string format_two_decimals(double value);
[[nodiscard]] std::string format_four_decimals(double value);

struct TableRow {
    std::string model_key;
    bool augmented = false;
    std::optional<MetricsReport> eval;   ///< absent renders as "--"
    std::optional<MetricsReport> test;
};

enum class TableFormat { plain, markdown, tsv, csv };

/// One row per model with Eval F1 and Test F1 (macro) columns. Augmented
/// rows get an " (AUG.)" suffix; markdown bolds the best test value.
/// Throws InvalidArgument on an empty row list.
[[nodiscard]] std::string report_table(std::span<const TableRow> rows, TableFormat format = TableFormat::plain);

struct FigureOptions {
    int cell_size = 0;     ///< 0 picks a size wide enough for the longest label
    int digit_scale = 4;   ///< pixel scale of the in-cell count glyphs
    int label_scale = 2;
};

/// Geometry of a rendered confusion heat map, exposed so tests can locate
/// cells in the decoded image.
struct FigureLayout {
    int width = 0;
    int height = 0;
    int grid_left = 0;
    int grid_top = 0;
    int cell_size = 0;
    std::size_t classes = 0;
};

[[nodiscard]] FigureLayout figure_layout(const MetricsReport &report, const TaskSpec &task, const FigureOptions &options = {});

/// Writes a PNG heat map: gold labels on rows, predicted labels on columns,
/// every cell annotated with its count. The matrix is also stored in a
/// `confusion` tEXt chunk. Throws InvalidArgument on an all-zero matrix and
/// UnwritablePath when the file cannot be created.
void confusion_figure(const MetricsReport &report, const TaskSpec &task, const std::filesystem::path &path, const FigureOptions &options = {});

}  // namespace stancekit
