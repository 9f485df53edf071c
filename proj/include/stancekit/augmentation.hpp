#pragma once

#include "stancekit/config.hpp"
#include "stancekit/corpus.hpp"

#include <json.hpp>

#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

/// Pivot sequence for back-translation: corpus language -> pivots... -> terminal.
struct AugmentationChain {
    std::string id;
    std::vector<std::string> pivots;
    std::string terminal = "en";

    /// Validates: non-empty id and pivots, no pivot equal to the terminal.
    [[nodiscard]] static AugmentationChain make(std::string id, std::vector<std::string> pivots, std::string terminal = "en");

    /// Parses an arrow list such as `en>xh>tw>en`; first and last code must
    /// both be the corpus language.
    [[nodiscard]] static AugmentationChain parse(std::string id, std::string_view arrows);

    /// (source, target) language pairs in call order, starting from terminal.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> hops() const;
    [[nodiscard]] std::string arrows() const;
};

/// xh>tw, lo>ps>yo, yo>so>rw and zu>om>sn>ts, each starting and ending in English.
[[nodiscard]] const std::vector<AugmentationChain> &builtin_chains();

/// Chains declared as `chain.<id> = en>..>en`, sorted by id. Empty when the
/// config declares none.
[[nodiscard]] std::vector<AugmentationChain> chains_from_config(const Config &cfg);

/// Machine-translation backend. Implementations signal failure with
/// TranslationFailure; `transient()` failures are retried.
class TranslationClient {
public:
    virtual ~TranslationClient() = default;
    [[nodiscard]] virtual std::string translate(std::string_view text, std::string_view source, std::string_view target) = 0;
    /// Request budget; zero or less means unlimited.
    [[nodiscard]] virtual double requests_per_second() const { return 0.0; }
};

class IdentityTranslator final : public TranslationClient {
public:
    std::string translate(std::string_view text, std::string_view, std::string_view) override { return std::string(text); }
};

/// Reverses the bytes on every hop; an even number of hops restores the input.
class ReversingTranslator final : public TranslationClient {
public:
    std::string translate(std::string_view text, std::string_view, std::string_view) override;
};

/// Deterministic stand-in for a real service: appends ` [target]` per hop, so
/// the result always differs from the source text.
class TaggingTranslator final : public TranslationClient {
public:
    std::string translate(std::string_view text, std::string_view source, std::string_view target) override;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds base_delay{200};   ///< doubled after each failed attempt
};

/// Derived id of the copy of `example_id` produced by `chain_id`.
[[nodiscard]] std::string augmented_id(std::string_view example_id, std::string_view chain_id);

/// Translates the example hop by hop along the chain. Throws InvalidArgument
/// unless the example is an original train example, and TranslationFailure
/// (with the failing hop) once retries are exhausted or a hop returns empty
/// text. Never returns a partially translated example.
[[nodiscard]] LabeledExample back_translate(const LabeledExample &example, const AugmentationChain &chain, TranslationClient &client,
                                            const RetryPolicy &retry = {});

struct AugmentOptions {
    RetryPolicy retry;
    /// Only the first N chains are applied to each example when set.
    std::optional<std::size_t> max_copies_per_example;
    /// Drop copies whose casefolded text equals the source.
    bool filter_identical = true;
    std::size_t max_in_flight = 1;
};

struct SkippedCopy {
    std::string example_id;
    std::string chain_id;
    std::string reason;     ///< "translation_failure" or "identical_text"
    std::string detail;
};

struct ChainSummary {
    std::string chain_id;
    std::size_t produced = 0;
    std::size_t failed = 0;
    std::size_t filtered = 0;
};

struct AugmentResult {
    /// Originals in input order followed by the accepted copies, ordered by
    /// source example then chain.
    std::vector<LabeledExample> examples;
    std::vector<std::string> minority_labels;
    std::vector<ChainSummary> per_chain;
    std::vector<SkippedCopy> skipped;

    [[nodiscard]] nlohmann::ordered_json summary_json() const;
};

/// Adds back-translated copies of every minority-label train example (see
/// minority_labels) through every chain. Originals are kept unchanged; copy
/// failures are logged and reported, never fatal.
[[nodiscard]] AugmentResult augment_training_set(std::span<const LabeledExample> examples, const TaskSpec &task,
                                                 std::span<const AugmentationChain> chains, TranslationClient &client,
                                                 const AugmentOptions &options = {});

}  // namespace stancekit
