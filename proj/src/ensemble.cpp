#include "stancekit/ensemble.hpp"

#include "stancekit/error.hpp"
#include "stancekit/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace stancekit {

std::string_view to_string(VoteMode mode) noexcept {
    return mode == VoteMode::majority ? "majority" : "weighted";
}

std::string_view to_string(TieBreak tie_break) noexcept {
    return tie_break == TieBreak::highest_weight_member ? "highest_weight_member" : "majority_label";
}

VoteMode parse_vote_mode(std::string_view s) {
    const std::string t = text::to_lower(text::trim(s));
    if (t == "majority") return VoteMode::majority;
    if (t == "weighted") return VoteMode::weighted;
    throw InvalidArgument("unknown vote mode '" + std::string(s) + "'");
}

TieBreak parse_tie_break(std::string_view s) {
    const std::string t = text::to_lower(text::trim(s));
    if (t == "highest_weight_member") return TieBreak::highest_weight_member;
    if (t == "majority_label") return TieBreak::majority_label;
    throw InvalidArgument("unknown tie break '" + std::string(s) + "'");
}

void EnsembleConfig::validate() const {
    if (members.size() < 2) {
        throw InvalidArgument("an ensemble needs at least two members");
    }
    bool any_positive = false;
    for (std::size_t i = 0; i < members.size(); ++i) {
        const auto &m = members[i];
        if (!std::isfinite(m.weight)) {
            throw InvalidArgument("member '" + m.model_key + "' has a non-finite weight");
        }
        if (m.weight < 0.0) {
            throw NegativeWeight(m.model_key, m.weight);
        }
        any_positive = any_positive || m.weight > 0.0;
        for (std::size_t j = 0; j < i; ++j) {
            if (members[j].model_key == m.model_key) {
                throw InvalidArgument("duplicate ensemble member '" + m.model_key + "'");
            }
        }
    }
    if (mode == VoteMode::weighted && !any_positive) {
        throw InvalidArgument("weighted ensemble needs at least one positive weight");
    }
}

EnsembleConfig EnsembleConfig::preset(std::string_view name, const Config &cfg) {
    EnsembleConfig out;
    out.name = std::string(name);
    std::vector<std::string> keys;
    if (name == "ensemble1") {
        keys = {"bertweet-large", "xlm-r", "fbert"};
    } else if (name == "ensemble2") {
        keys = {"hate-bert", "xlm-r", "fbert"};
    }
    const std::string prefix = "ensemble." + std::string(name) + ".";
    if (const auto members = cfg.get(prefix + "members")) {
        keys.clear();
        for (const auto &k : text::split(*members, ',')) {
            keys.emplace_back(text::trim(k));
        }
    }
    if (keys.empty()) {
        throw InvalidArgument("unknown ensemble preset '" + std::string(name) + "'");
    }
    for (auto &k : keys) {
        out.members.push_back({std::move(k), 1.0});
    }
    if (const auto weights = cfg.get(prefix + "weights")) {
        const auto parts = text::split(*weights, ',');
        if (parts.size() != out.members.size()) {
            throw MemberCountMismatch(out.members.size(), parts.size());
        }
        for (std::size_t i = 0; i < parts.size(); ++i) {
            try {
                out.members[i].weight = std::stod(std::string(text::trim(parts[i])));
            } catch (const std::exception &) {
                throw InvalidArgument("bad weight '" + parts[i] + "' in " + prefix + "weights");
            }
        }
    }
    if (const auto mode = cfg.get(prefix + "mode")) {
        out.mode = parse_vote_mode(*mode);
    }
    if (const auto tb = cfg.get(prefix + "tie_break")) {
        out.tie_break = parse_tie_break(*tb);
    }
    out.validate();
    return out;
}

std::vector<double> weights_from_dev_f1(std::span<const double> dev_f1) {
    double sum = 0.0;
    for (const double f : dev_f1) {
        if (!std::isfinite(f) || f < 0.0) {
            throw InvalidArgument("dev F1 values must be finite and non-negative");
        }
        sum += f;
    }
    std::vector<double> w(dev_f1.size(), dev_f1.empty() ? 0.0 : 1.0 / static_cast<double>(dev_f1.size()));
    if (sum > 0.0) {
        for (std::size_t i = 0; i < dev_f1.size(); ++i) {
            w[i] = dev_f1[i] / sum;
        }
    }
    return w;
}

namespace {

std::size_t label_index(const TaskSpec &task, std::string_view label) {
    const auto idx = task.index_of(label);
    if (!idx) {
        throw InvalidArgument("vote '" + std::string(label) + "' is not in the label set");
    }
    return *idx;
}

/// `tied` holds label indices; `votes` holds each member's hard label index.
std::string break_tie(const std::vector<std::size_t> &tied, const std::vector<std::size_t> &votes, const EnsembleConfig &config,
                      const TaskSpec &task) {
    if (tied.size() == 1) {
        return task.labels()[tied.front()];
    }
    if (config.tie_break == TieBreak::majority_label) {
        return task.majority_label();
    }
    std::optional<std::size_t> best;
    for (std::size_t m = 0; m < votes.size(); ++m) {
        if (std::find(tied.begin(), tied.end(), votes[m]) == tied.end()) {
            continue;
        }
        if (!best || config.members[m].weight > config.members[*best].weight) {
            best = m;
        }
    }
    // a soft-score tie nobody voted for outright: first tied label in label order
    return task.labels()[best ? votes[*best] : tied.front()];
}

}  // namespace

std::string majority_vote(std::span<const std::string> predictions, const EnsembleConfig &config, const TaskSpec &task) {
    if (predictions.size() != config.members.size()) {
        throw MemberCountMismatch(config.members.size(), predictions.size());
    }
    std::vector<std::size_t> counts(task.size(), 0);
    std::vector<std::size_t> votes;
    votes.reserve(predictions.size());
    for (const auto &p : predictions) {
        votes.push_back(label_index(task, p));
        ++counts[votes.back()];
    }
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    std::vector<std::size_t> tied;
    for (std::size_t l = 0; l < counts.size(); ++l) {
        if (counts[l] == top) {
            tied.push_back(l);
        }
    }
    return break_tie(tied, votes, config, task);
}

std::vector<double> weighted_totals(std::span<const MemberVote> predictions, const EnsembleConfig &config, const TaskSpec &task) {
    if (predictions.size() != config.members.size()) {
        throw MemberCountMismatch(config.members.size(), predictions.size());
    }
    std::vector<double> totals(task.size(), 0.0);
    for (std::size_t m = 0; m < predictions.size(); ++m) {
        const double w = config.members[m].weight;
        if (!std::isfinite(w)) {
            throw InvalidArgument("member '" + config.members[m].model_key + "' has a non-finite weight");
        }
        if (w < 0.0) {
            throw NegativeWeight(config.members[m].model_key, w);
        }
        const auto &vote = predictions[m];
        if (vote.scores.empty()) {
            totals[label_index(task, vote.label)] += w;
            continue;
        }
        if (vote.scores.size() != task.size()) {
            throw InvalidArgument("score vector length does not match the label set");
        }
        for (std::size_t l = 0; l < task.size(); ++l) {
            totals[l] += w * vote.scores[l];
        }
    }
    return totals;
}

std::string weighted_vote(std::span<const MemberVote> predictions, const EnsembleConfig &config, const TaskSpec &task) {
    const std::vector<double> totals = weighted_totals(predictions, config, task);
    double weight_sum = 0.0;
    for (const auto &m : config.members) {
        weight_sum += m.weight;
    }
    const double top = *std::max_element(totals.begin(), totals.end());
    const double tolerance = 1e-9 * weight_sum;
    std::vector<std::size_t> tied;
    for (std::size_t l = 0; l < totals.size(); ++l) {
        if (totals[l] >= top - tolerance) {
            tied.push_back(l);
        }
    }
    std::vector<std::size_t> votes;
    votes.reserve(predictions.size());
    for (const auto &p : predictions) {
        votes.push_back(label_index(task, p.label));
    }
    return break_tie(tied, votes, config, task);
}

PredictionSet ensemble_predictions(std::span<const PredictionSet> sets, const EnsembleConfig &config, const TaskSpec &task) {
    config.validate();
    if (sets.size() != config.members.size()) {
        throw MemberCountMismatch(config.members.size(), sets.size());
    }
    std::vector<const PredictionSet *> ordered;
    for (const auto &member : config.members) {
        const auto it = std::find_if(sets.begin(), sets.end(), [&](const PredictionSet &s) { return s.model_key == member.model_key; });
        if (it == sets.end()) {
            throw MemberCountMismatch("no prediction set for ensemble member '" + member.model_key + "'");
        }
        ordered.push_back(&*it);
    }
    for (const PredictionSet *s : ordered) {
        if (s->task != task.id()) {
            throw TaskMismatch("member '" + s->model_key + "' predicts task " + std::string(to_string(s->task)));
        }
        if (s->split != ordered.front()->split) {
            throw TaskMismatch("member '" + s->model_key + "' covers split " + std::string(to_string(s->split)));
        }
    }

    std::vector<std::unordered_map<std::string_view, const PredictionRow *>> index(ordered.size());
    std::set<std::string> base_ids;
    for (const auto &row : ordered.front()->rows) {
        base_ids.insert(row.id);
    }
    std::set<std::string> mismatched;
    for (std::size_t m = 0; m < ordered.size(); ++m) {
        std::set<std::string> ids;
        for (const auto &row : ordered[m]->rows) {
            index[m].emplace(row.id, &row);
            ids.insert(row.id);
        }
        std::set_symmetric_difference(base_ids.begin(), base_ids.end(), ids.begin(), ids.end(),
                                      std::inserter(mismatched, mismatched.end()));
    }
    if (!mismatched.empty()) {
        throw ExampleUniverseMismatch(std::vector<std::string>(mismatched.begin(), mismatched.end()));
    }

    PredictionSet out;
    out.task = task.id();
    out.split = ordered.front()->split;
    std::vector<std::string> keys;
    std::vector<std::string> weights;
    bool all_augmented = true;
    for (std::size_t m = 0; m < ordered.size(); ++m) {
        keys.push_back(config.members[m].model_key);
        weights.push_back(fmt::format("{}", config.members[m].weight));
        const auto it = ordered[m]->metadata.find("augmented");
        all_augmented = all_augmented && it != ordered[m]->metadata.end() && it->second == "true";
    }
    const std::string composed = fmt::format("{}[{}]", to_string(config.mode), text::join(keys, "+"));
    out.model_key = config.name.empty() ? "ensemble:" + composed : config.name + ":" + composed;
    out.metadata["mode"] = to_string(config.mode);
    out.metadata["tie_break"] = to_string(config.tie_break);
    out.metadata["members"] = text::join(keys, ",");
    out.metadata["weights"] = text::join(weights, ",");
    out.metadata["augmented"] = all_augmented ? "true" : "false";

    double weight_sum = 0.0;
    for (const auto &m : config.members) {
        weight_sum += m.weight;
    }
    out.rows.reserve(ordered.front()->rows.size());
    for (const auto &base : ordered.front()->rows) {
        PredictionRow row;
        row.id = base.id;
        if (config.mode == VoteMode::majority) {
            std::vector<std::string> votes;
            std::vector<double> shares(task.size(), 0.0);
            for (std::size_t m = 0; m < ordered.size(); ++m) {
                votes.push_back(index[m].at(base.id)->label);
                shares[label_index(task, votes.back())] += 1.0 / static_cast<double>(ordered.size());
            }
            row.label = majority_vote(votes, config, task);
            row.scores = std::move(shares);
        } else {
            std::vector<MemberVote> votes;
            for (std::size_t m = 0; m < ordered.size(); ++m) {
                const PredictionRow *r = index[m].at(base.id);
                votes.push_back({r->label, r->scores.value_or(std::vector<double>{})});
            }
            row.label = weighted_vote(votes, config, task);
            std::vector<double> totals = weighted_totals(votes, config, task);
            for (double &t : totals) {
                t /= weight_sum;
            }
            row.scores = std::move(totals);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace stancekit
