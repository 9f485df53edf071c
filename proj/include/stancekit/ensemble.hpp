#pragma once

#include "stancekit/config.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/predictions.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stancekit {

enum class VoteMode { majority, weighted };
enum class TieBreak { highest_weight_member, majority_label };

[[nodiscard]] std::string_view to_string(VoteMode mode) noexcept;
[[nodiscard]] std::string_view to_string(TieBreak tie_break) noexcept;
[[nodiscard]] VoteMode parse_vote_mode(std::string_view s);
[[nodiscard]] TieBreak parse_tie_break(std::string_view s);

struct EnsembleMember {
    std::string model_key;
    double weight = 1.0;
};

struct EnsembleConfig {
    std::string name;   ///< preset name, may be empty
    VoteMode mode = VoteMode::weighted;
    std::vector<EnsembleMember> members;
    TieBreak tie_break = TieBreak::highest_weight_member;

    /// At least two members with unique keys and finite weights; NegativeWeight
    /// on a weight below zero; weighted mode needs one positive weight.
    void validate() const;

    /// "ensemble1" = bertweet-large, xlm-r, fbert; "ensemble2" = hate-bert,
    /// xlm-r, fbert. Both weighted with equal weights until dev scores are
    /// supplied. Entries `ensemble.<name>.{members,weights,mode,tie_break}`
    /// in `cfg` override or define presets.
    [[nodiscard]] static EnsembleConfig preset(std::string_view name, const Config &cfg = {});
};

/// Weights proportional to each member's dev macro F1, summing to one. All
/// zeros fall back to equal weights.
[[nodiscard]] std::vector<double> weights_from_dev_f1(std::span<const double> dev_f1);

/// Plurality of hard votes. A tie among the top counts is settled by the
/// configured policy: the heaviest member (earliest listed on equal weight)
/// whose vote is among the tied labels, or the task's majority label.
[[nodiscard]] std::string majority_vote(std::span<const std::string> predictions, const EnsembleConfig &config, const TaskSpec &task);

struct MemberVote {
    std::string label;
    /// Probabilities in task label order; empty means vote one-hot on `label`.
    std::vector<double> scores;
};

/// argmax over labels of sum_m weight_m * s_m(label). Labels within a relative
/// 1e-9 of the top total are treated as tied and resolved like majority_vote.
[[nodiscard]] std::string weighted_vote(std::span<const MemberVote> predictions, const EnsembleConfig &config, const TaskSpec &task);

/// Per-label weighted totals, exposed for diagnostics and the ensemble's own
/// output scores.
[[nodiscard]] std::vector<double> weighted_totals(std::span<const MemberVote> predictions, const EnsembleConfig &config, const TaskSpec &task);

/// Joins member sets by example id and votes per example. Sets are matched to
/// members by model_key. Output rows follow the first member's order, and
/// carry vote shares (majority) or normalised weighted totals (weighted).
[[nodiscard]] PredictionSet ensemble_predictions(std::span<const PredictionSet> sets, const EnsembleConfig &config, const TaskSpec &task);

}  // namespace stancekit
