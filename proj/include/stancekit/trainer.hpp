#pragma once

#include "stancekit/config.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/predictions.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

struct TrainConfig {
    double learning_rate = 1e-5;
    std::size_t train_batch = 8;
    std::size_t eval_batch = 8;
    std::size_t epochs = 5;
    double dropout = 0.2;
    std::size_t max_seq_len = 128;
    std::uint64_t seed = 42;
    // AdamW with a constant learning rate
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double clip_norm = 1.0;

    /// Throws InvalidArgument unless learning_rate > 0, 0 <= dropout < 1 and
    /// batch sizes and max_seq_len are positive.
    void validate() const;
    /// Reads `train.<field>` keys, falling back to the defaults above.
    [[nodiscard]] static TrainConfig from_config(const Config &cfg);
    /// Hex digest of every field, stable across runs.
    [[nodiscard]] std::string hash() const;
};

struct ModelEntry {
    std::string registry_key;
    std::string encoder_ref;
    std::size_t head_dim = 0;

    friend bool operator==(const ModelEntry &, const ModelEntry &) = default;
};

/// Registry keys to encoder identifiers. `model.<key>.encoder` in the config
/// remaps a key, which is how desk-scale `tiny:` encoders stand in for the
/// pretrained checkpoints.
class ModelRegistry {
public:
    /// bertweet-large, bertweet-base, xlm-r, hate-bert, fbert, bert-base.
    [[nodiscard]] static ModelRegistry defaults();
    [[nodiscard]] static ModelRegistry from_config(const Config &cfg);

    void set(std::string key, std::string encoder_ref);
    [[nodiscard]] std::vector<std::string> keys() const;
    /// Throws InvalidArgument for an unregistered key.
    [[nodiscard]] ModelEntry entry(std::string_view key, const TaskSpec &task) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shape of the in-process encoder, parsed from `tiny:buckets=..,dim=..,hidden=..`.
struct TinyEncoderSpec {
    std::size_t buckets = 2048;
    std::size_t dim = 32;
    std::size_t hidden = 32;

    friend bool operator==(const TinyEncoderSpec &, const TinyEncoderSpec &) = default;

    /// Throws UnsupportedEncoder for anything that is not a tiny: reference.
    [[nodiscard]] static TinyEncoderSpec parse(std::string_view encoder_ref);
};

/// Lowercased word pieces split on whitespace and punctuation other than
/// '#', '@', '\'' and '-', truncated to max_len.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text, std::size_t max_len);

/// Trained classifier: hashed token embeddings, mean pooling, one tanh
/// layer, dropout, and a linear head over the task labels.
class TextClassifier {
public:
    /// Initialised from `seed`: embeddings ~ N(0, 1), hidden layer Xavier
    /// uniform, head zero.
    TextClassifier(ModelEntry entry, const TaskSpec &task, TinyEncoderSpec spec, std::uint64_t seed);

    [[nodiscard]] const ModelEntry &entry() const noexcept { return entry_; }
    [[nodiscard]] TaskId task() const noexcept { return task_; }
    [[nodiscard]] const std::vector<std::string> &labels() const noexcept { return labels_; }
    [[nodiscard]] const TinyEncoderSpec &spec() const noexcept { return spec_; }
    [[nodiscard]] std::size_t parameter_count() const noexcept;

    /// Softmax probabilities in label order.
    [[nodiscard]] std::vector<double> probabilities(std::string_view text, std::size_t max_seq_len) const;

    void save(const std::filesystem::path &file) const;
    [[nodiscard]] static TextClassifier load(const std::filesystem::path &file);

    friend bool operator==(const TextClassifier &, const TextClassifier &) = default;

private:
    friend class Trainer;
    TextClassifier() = default;

    ModelEntry entry_;
    TaskId task_ = TaskId::A;
    std::vector<std::string> labels_;
    TinyEncoderSpec spec_;
    std::vector<double> embed_;    // buckets x dim
    std::vector<double> w1_;       // hidden x dim
    std::vector<double> b1_;       // hidden
    std::vector<double> w2_;       // labels x hidden
    std::vector<double> b2_;       // labels
};

struct EpochRecord {
    std::size_t epoch = 0;   ///< 1-based
    double train_loss = 0.0;
    double dev_macro_f1 = 0.0;
};

struct FineTuneResult {
    TextClassifier model;
    std::vector<EpochRecord> trace;
    std::optional<std::size_t> best_epoch;   ///< empty when no epoch ran
    std::optional<double> best_dev_f1;
};

/// Trains for cfg.epochs epochs of shuffled mini-batches with plain
/// cross-entropy and returns the weights of the epoch with the best dev
/// macro F1 (earliest on ties). Throws LabelCardinalityMismatch when the
/// entry's head does not match the task, UnsupportedEncoder for a
/// non-tiny encoder, and OutOfMemory naming the batch size.
[[nodiscard]] FineTuneResult fine_tune(std::span<const LabeledExample> train, std::span<const LabeledExample> dev, const TaskSpec &task,
                                       const ModelEntry &entry, const TrainConfig &cfg);

/// One row per example, in order, with softmax scores. Throws TaskMismatch
/// when the model was trained for a different task or label set.
[[nodiscard]] PredictionSet predict(const TextClassifier &model, std::span<const LabeledExample> examples, const TaskSpec &task,
                                    const TrainConfig &cfg, std::optional<Split> split = std::nullopt);

/// Writes model.bin and trace.json under `dir` (created if needed).
void save_checkpoint(const std::filesystem::path &dir, const FineTuneResult &result, const TrainConfig &cfg);

}  // namespace stancekit
