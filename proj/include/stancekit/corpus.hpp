#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

enum class TaskId { A, B, C };
enum class Split { train, eval, test };
enum class Origin { original, augmented };

[[nodiscard]] std::string_view to_string(TaskId id) noexcept;
[[nodiscard]] std::string_view to_string(Split split) noexcept;
[[nodiscard]] std::string_view to_string(Origin origin) noexcept;
[[nodiscard]] TaskId parse_task_id(std::string_view s);
[[nodiscard]] Split parse_split(std::string_view s);
[[nodiscard]] Origin parse_origin(std::string_view s);

/// Identity and label schema of one subtask.
class TaskSpec {
public:
    /// Throws InvalidArgument if the label set is empty, has duplicates, or
    /// does not contain the majority label.
    TaskSpec(TaskId id, std::string name, std::vector<std::string> labels, std::string majority_label);

    /// A: hate speech, B: hate target, C: stance.
    [[nodiscard]] static const TaskSpec &builtin(TaskId id);

    [[nodiscard]] TaskId id() const noexcept { return id_; }
    [[nodiscard]] const std::string &name() const noexcept { return name_; }
    [[nodiscard]] const std::vector<std::string> &labels() const noexcept { return labels_; }
    [[nodiscard]] const std::string &majority_label() const noexcept { return majority_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }

    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view label) const noexcept;
    [[nodiscard]] bool contains(std::string_view label) const noexcept { return index_of(label).has_value(); }
    /// Maps a raw dataset cell to a label token: case-insensitive match on the
    /// token, or the label's 0-based position written as an integer (the
    /// numeric encoding used by the shared-task release).
    [[nodiscard]] std::optional<std::string> canonical_label(std::string_view raw) const;

private:
    TaskId id_;
    std::string name_;
    std::vector<std::string> labels_;
    std::string majority_;
};

struct LabeledExample {
    std::string id;
    std::string text;
    /// Empty for unlabeled test rows; such rows cannot be scored.
    std::optional<std::string> label;
    Split split = Split::train;
    Origin origin = Origin::original;
    /// Set iff origin == augmented.
    std::optional<std::string> chain_id;

    [[nodiscard]] bool labeled() const noexcept { return label.has_value(); }
    friend bool operator==(const LabeledExample &, const LabeledExample &) = default;
};

struct SplitDistribution {
    Split split = Split::train;
    std::size_t total = 0;
    std::vector<std::size_t> counts;          ///< aligned with DistributionReport::labels
    std::vector<std::int64_t> hundredths;     ///< percentage * 100, rounded half-up

    [[nodiscard]] double percent(std::size_t label_index) const { return static_cast<double>(hundredths.at(label_index)) / 100.0; }
};

struct DistributionReport {
    TaskId task = TaskId::A;
    std::vector<std::string> labels;
    std::vector<SplitDistribution> splits;    ///< in train, eval, test order; absent splits omitted

    [[nodiscard]] const SplitDistribution *find(Split split) const noexcept;
};

/// round_half_up(100 * count / total, 2 decimals) expressed in hundredths, exact.
[[nodiscard]] std::int64_t percent_hundredths(std::size_t count, std::size_t total);

/// Reads an index/tweet/label file (comma or tab delimited, detected from the
/// header). The label column may be missing only for the test split. Extra
/// origin/chain_id columns, as written for augmented corpora, are honoured.
[[nodiscard]] std::vector<LabeledExample> load_dataset(const std::filesystem::path &path, const TaskSpec &task, Split split);
[[nodiscard]] std::vector<LabeledExample> parse_dataset(std::istream &in, const TaskSpec &task, Split split);

/// Writes index/tweet/label, plus origin/chain_id when `with_provenance`.
void write_dataset(std::ostream &out, std::span<const LabeledExample> examples, bool with_provenance, char delimiter = ',');
void write_dataset(const std::filesystem::path &path, std::span<const LabeledExample> examples, bool with_provenance, char delimiter = ',');

/// Label counts and percentages per split. Unlabeled rows are not counted.
/// Throws EmptyDataset when no labeled example is given.
[[nodiscard]] DistributionReport distribution(std::span<const LabeledExample> examples, const TaskSpec &task);

/// Every label except those tied for the highest train count, in label-set
/// order. Uses the train split, or the first split when the report has none.
[[nodiscard]] std::vector<std::string> minority_labels(const DistributionReport &report, const TaskSpec &task);

/// Label rows by split columns, percentages at two decimals; optional count
/// columns follow each percentage.
[[nodiscard]] std::string format_distribution(const DistributionReport &report, char delimiter = '\t', bool with_counts = false);

}  // namespace stancekit
