#include "stancekit/augmentation.hpp"

#include "stancekit/error.hpp"
#include "stancekit/parallel.hpp"
#include "stancekit/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <thread>

namespace stancekit {

AugmentationChain AugmentationChain::make(std::string id, std::vector<std::string> pivots, std::string terminal) {
    if (text::trim(id).empty()) {
        throw InvalidArgument("augmentation chain needs an id");
    }
    if (pivots.empty()) {
        throw InvalidArgument("chain '" + id + "' has no pivot languages");
    }
    if (terminal.empty()) {
        throw InvalidArgument("chain '" + id + "' has no terminal language");
    }
    for (const auto &p : pivots) {
        if (p.empty()) {
            throw InvalidArgument("chain '" + id + "' has an empty language code");
        }
        if (p == terminal) {
            throw InvalidArgument("chain '" + id + "' pivots through the corpus language " + terminal);
        }
    }
    return AugmentationChain{std::move(id), std::move(pivots), std::move(terminal)};
}

AugmentationChain AugmentationChain::parse(std::string id, std::string_view arrows) {
    std::vector<std::string> codes;
    for (const auto &c : text::split(arrows, '>')) {
        codes.push_back(text::to_lower(text::trim(c)));
    }
    if (codes.size() < 3) {
        throw InvalidArgument("chain '" + id + "' must look like en>xx>en");
    }
    if (codes.front() != codes.back()) {
        throw InvalidArgument("chain '" + id + "' must start and end in the same language");
    }
    std::string terminal = codes.back();
    return make(std::move(id), std::vector<std::string>(codes.begin() + 1, codes.end() - 1), std::move(terminal));
}

std::vector<std::pair<std::string, std::string>> AugmentationChain::hops() const {
    std::vector<std::pair<std::string, std::string>> out;
    std::string from = terminal;
    for (const auto &p : pivots) {
        out.emplace_back(from, p);
        from = p;
    }
    out.emplace_back(from, terminal);
    return out;
}

std::string AugmentationChain::arrows() const {
    return terminal + ">" + text::join(pivots, ">") + ">" + terminal;
}

const std::vector<AugmentationChain> &builtin_chains() {
    static const std::vector<AugmentationChain> chains{
        AugmentationChain::make("xh-tw", {"xh", "tw"}),
        AugmentationChain::make("lo-ps-yo", {"lo", "ps", "yo"}),
        AugmentationChain::make("yo-so-rw", {"yo", "so", "rw"}),
        AugmentationChain::make("zu-om-sn-ts", {"zu", "om", "sn", "ts"}),
    };
    return chains;
}

std::vector<AugmentationChain> chains_from_config(const Config &cfg) {
    std::vector<AugmentationChain> out;
    for (const auto &[id, arrows] : cfg.with_prefix("chain.")) {
        out.push_back(AugmentationChain::parse(id, arrows));
    }
    return out;
}

std::string ReversingTranslator::translate(std::string_view text, std::string_view, std::string_view) {
    return std::string(text.rbegin(), text.rend());
}

std::string TaggingTranslator::translate(std::string_view text, std::string_view, std::string_view target) {
    return std::string(text) + " [" + std::string(target) + "]";
}

std::string augmented_id(std::string_view example_id, std::string_view chain_id) {
    return std::string(example_id) + "~bt:" + std::string(chain_id);
}

LabeledExample back_translate(const LabeledExample &example, const AugmentationChain &chain, TranslationClient &client, const RetryPolicy &retry) {
    if (example.origin != Origin::original) {
        throw InvalidArgument("only original examples are back-translated ('" + example.id + "' is augmented)");
    }
    if (example.split != Split::train) {
        throw InvalidArgument("only train examples are back-translated ('" + example.id + "' is " + std::string(to_string(example.split)) + ")");
    }
    const auto hops = chain.hops();
    std::string current = example.text;
    for (std::size_t step = 0; step < hops.size(); ++step) {
        const auto &[source, target] = hops[step];
        auto delay = retry.base_delay;
        for (int attempt = 1;; ++attempt) {
            try {
                std::string next = client.translate(current, source, target);
                if (text::trim(next).empty()) {
                    throw TranslationFailure("empty translation " + source + "->" + target, false, step);
                }
                current = std::move(next);
                break;
            } catch (const TranslationFailure &e) {
                if (!e.transient() || attempt >= retry.attempts) {
                    throw TranslationFailure(std::string(e.what()) + " (hop " + std::to_string(step) + " " + source + "->" + target + ", attempt " +
                                                 std::to_string(attempt) + ")",
                                             e.transient(), step);
                }
            }
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    LabeledExample out = example;
    out.id = augmented_id(example.id, chain.id);
    out.text = std::move(current);
    out.origin = Origin::augmented;
    out.chain_id = chain.id;
    return out;
}

namespace {

class RateLimitedClient final : public TranslationClient {
public:
    explicit RateLimitedClient(TranslationClient &inner) : inner_(inner), limiter_(inner.requests_per_second()) {}

    std::string translate(std::string_view text, std::string_view source, std::string_view target) override {
        limiter_.acquire();
        return inner_.translate(text, source, target);
    }

private:
    TranslationClient &inner_;
    RateLimiter limiter_;
};

struct Slot {
    std::optional<LabeledExample> copy;
    std::string failure;
    bool identical = false;
};

}  // namespace

nlohmann::ordered_json AugmentResult::summary_json() const {
    nlohmann::ordered_json j;
    j["minority_labels"] = minority_labels;
    j["total"] = examples.size();
    nlohmann::ordered_json chains = nlohmann::ordered_json::array();
    for (const auto &c : per_chain) {
        chains.push_back({{"chain_id", c.chain_id}, {"produced", c.produced}, {"failed", c.failed}, {"filtered", c.filtered}});
    }
    j["chains"] = std::move(chains);
    nlohmann::ordered_json skips = nlohmann::ordered_json::array();
    for (const auto &s : skipped) {
        skips.push_back({{"example_id", s.example_id}, {"chain_id", s.chain_id}, {"reason", s.reason}, {"detail", s.detail}});
    }
    j["skipped"] = std::move(skips);
    return j;
}

AugmentResult augment_training_set(std::span<const LabeledExample> examples, const TaskSpec &task, std::span<const AugmentationChain> chains,
                                   TranslationClient &client, const AugmentOptions &options) {
    for (const auto &ex : examples) {
        if (ex.split != Split::train) {
            throw InvalidArgument("augmentation input must be train examples only ('" + ex.id + "' is " + std::string(to_string(ex.split)) + ")");
        }
    }
    AugmentResult result;
    result.examples.assign(examples.begin(), examples.end());
    for (const auto &c : chains) {
        result.per_chain.push_back({c.id, 0, 0, 0});
    }
    bool any_labeled = std::any_of(examples.begin(), examples.end(), [](const LabeledExample &e) { return e.labeled(); });
    if (!any_labeled || chains.empty()) {
        return result;
    }
    result.minority_labels = minority_labels(distribution(examples, task), task);

    std::vector<std::size_t> sources;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto &ex = examples[i];
        if (ex.origin == Origin::original && ex.labeled()
            && std::find(result.minority_labels.begin(), result.minority_labels.end(), *ex.label) != result.minority_labels.end()) {
            sources.push_back(i);
        }
    }
    const std::size_t copies = std::min(chains.size(), options.max_copies_per_example.value_or(chains.size()));

    RateLimitedClient limited(client);
    std::vector<Slot> slots(sources.size() * copies);
    parallel_for(sources.size(), options.max_in_flight, [&](std::size_t s) {
        const LabeledExample &ex = examples[sources[s]];
        for (std::size_t c = 0; c < copies; ++c) {
            Slot &slot = slots[s * copies + c];
            try {
                LabeledExample copy = back_translate(ex, chains[c], limited, options.retry);
                if (options.filter_identical && text::casefold(copy.text) == text::casefold(ex.text)) {
                    slot.identical = true;
                } else {
                    slot.copy = std::move(copy);
                }
            } catch (const TranslationFailure &e) {
                slot.failure = e.what();
            }
        }
    });

    for (std::size_t s = 0; s < sources.size(); ++s) {
        const std::string &source_id = examples[sources[s]].id;
        for (std::size_t c = 0; c < copies; ++c) {
            Slot &slot = slots[s * copies + c];
            ChainSummary &summary = result.per_chain[c];
            if (slot.copy) {
                ++summary.produced;
                result.examples.push_back(std::move(*slot.copy));
            } else if (slot.identical) {
                ++summary.filtered;
                spdlog::info("dropped copy of {} via {}: translation identical to source", source_id, chains[c].id);
                result.skipped.push_back({source_id, chains[c].id, "identical_text", ""});
            } else {
                ++summary.failed;
                spdlog::warn("skipped {} via {}: {}", source_id, chains[c].id, slot.failure);
                result.skipped.push_back({source_id, chains[c].id, "translation_failure", slot.failure});
            }
        }
    }
    return result;
}

}  // namespace stancekit
