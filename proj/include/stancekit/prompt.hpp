#pragma once

#include "stancekit/config.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/error.hpp"
#include "stancekit/predictions.hpp"

#include <cstdint>
#include <functional>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stancekit {

/// Per-task wording that fills the template's placeholders.
struct PromptWording {
    std::string task_name;
    std::string definition;   ///< one sentence, no trailing period
};

[[nodiscard]] PromptWording default_wording(const TaskSpec &task);
/// `prompt.<A|B|C>.name` and `prompt.<A|B|C>.definition` override the defaults.
[[nodiscard]] PromptWording wording_from_config(const Config &cfg, const TaskSpec &task);

struct Exemplar {
    std::string text;
    std::string label;
};

/// Role / Definition / (Examples) / Task blocks, followed by the input text.
struct PromptTemplate {
    std::string role_block;
    std::string definition_block;
    std::string task_block;
    std::vector<Exemplar> exemplars;

    [[nodiscard]] std::string render(std::string_view input_text) const;
};

/// The output-format tag as the instruction spells it: `<label> X <\label>`.
[[nodiscard]] std::string format_label_tag(std::string_view label);

[[nodiscard]] PromptTemplate make_template(const TaskSpec &task, const PromptWording &wording, std::vector<Exemplar> exemplars = {});

/// `shots` exemplars per label drawn from the pool with a seeded shuffle,
/// interleaved label by label. Throws InsufficientExemplars when a label has
/// fewer than `shots` labeled pool examples.
[[nodiscard]] std::vector<Exemplar> sample_exemplars(const TaskSpec &task, std::size_t shots, std::span<const LabeledExample> pool,
                                                     std::uint64_t seed);

[[nodiscard]] std::string build_prompt(const TaskSpec &task, std::string_view input_text, std::size_t shots,
                                       std::span<const LabeledExample> exemplar_pool, std::uint64_t seed);
[[nodiscard]] std::string build_prompt(const TaskSpec &task, std::string_view input_text, std::size_t shots,
                                       std::span<const LabeledExample> exemplar_pool, std::uint64_t seed, const PromptWording &wording);

struct ParseFailure {
    std::string reason;
    friend bool operator==(const ParseFailure &, const ParseFailure &) = default;
};

using ParsedLabel = std::variant<std::string, ParseFailure>;

/// Finds the first `<label>` tag and the next `</label>` or `<\label>` closer,
/// then matches the enclosed text (or its first word) case-insensitively
/// against the label set.
[[nodiscard]] ParsedLabel parse_label(std::string_view response, const TaskSpec &task);

class LLMClient {
public:
    virtual ~LLMClient() = default;
    /// Throws ClientFailure when the backend cannot produce a response.
    [[nodiscard]] virtual std::string complete(std::string_view prompt) = 0;
};

class ConstantLLM final : public LLMClient {
public:
    explicit ConstantLLM(std::string response) : response_(std::move(response)) {}
    std::string complete(std::string_view) override { return response_; }

private:
    std::string response_;
};

/// Calls a user-supplied function; serialised with a mutex so test lambdas
/// need not be thread-safe.
class FunctionLLM final : public LLMClient {
public:
    explicit FunctionLLM(std::function<std::string(std::string_view)> fn) : fn_(std::move(fn)) {}
    std::string complete(std::string_view prompt) override {
        const std::lock_guard lock(mutex_);
        return fn_(prompt);
    }

private:
    std::function<std::string(std::string_view)> fn_;
    std::mutex mutex_;
};

/// Offline stand-in: answers with a label chosen by hashing the text after
/// the final "Text:" marker, in the tagged output format.
class HashingMockLLM final : public LLMClient {
public:
    explicit HashingMockLLM(const TaskSpec &task) : labels_(task.labels()) {}
    std::string complete(std::string_view prompt) override;

private:
    std::vector<std::string> labels_;
};

struct ClassifyOptions {
    std::size_t shots = 0;
    std::uint64_t seed = 42;
    std::size_t max_in_flight = 1;
    PromptWording wording;          ///< empty task_name selects default_wording
    std::ostream *log = nullptr;    ///< JSON-lines audit trail, one record per request
};

/// Thrown when the client fails; carries the predictions completed so far.
class ClassificationAborted : public ClientFailure {
public:
    ClassificationAborted(const std::string &message, PredictionSet partial)
        : ClientFailure(message), partial_(std::move(partial)) {}
    [[nodiscard]] const PredictionSet &partial() const noexcept { return partial_; }

private:
    PredictionSet partial_;
};

/// One prediction per example, in input order. An unparseable response is
/// re-prompted once; a second failure falls back to the majority label and
/// is counted in metadata["fallback_count"]. Pool examples sharing an id with
/// a classified example are excluded before exemplars are sampled.
[[nodiscard]] PredictionSet classify_with_llm(std::span<const LabeledExample> examples, const TaskSpec &task, LLMClient &client,
                                              std::span<const LabeledExample> exemplar_pool, const ClassifyOptions &options = {});

}  // namespace stancekit
