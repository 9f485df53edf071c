#pragma once

// Brute-force reference implementations used by the unit and acceptance tests.

#include "stancekit/corpus.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace stancekit::testing {

/// Hard-vote plurality with ties settled by the heaviest tied voter (earliest
/// on equal weight) or the task's majority label.
inline std::string oracle_majority(const std::vector<std::size_t> &votes, const std::vector<double> &weights, const TaskSpec &task,
                                   bool majority_label_policy) {
    const std::size_t labels = task.size();
    std::vector<int> count(labels, 0);
    for (const std::size_t v : votes) count[v] += 1;
    int top = 0;
    for (const int c : count) top = c > top ? c : top;
    std::vector<bool> tied(labels, false);
    int n_tied = 0;
    for (std::size_t l = 0; l < labels; ++l) {
        if (count[l] == top) {
            tied[l] = true;
            ++n_tied;
        }
    }
    if (n_tied == 1) {
        for (std::size_t l = 0; l < labels; ++l) {
            if (tied[l]) return task.labels()[l];
        }
    }
    if (majority_label_policy) return task.majority_label();
    std::size_t pick = votes.size();
    for (std::size_t m = 0; m < votes.size(); ++m) {
        if (tied[votes[m]] && (pick == votes.size() || weights[m] > weights[pick])) pick = m;
    }
    return task.labels()[votes[pick]];
}

/// argmax of weighted score sums; `scores[m]` is member m's distribution.
/// Totals within 1e-9 * sum(weights) of the top are ties.
inline std::string oracle_weighted(const std::vector<std::vector<double>> &scores, const std::vector<std::size_t> &votes,
                                   const std::vector<double> &weights, const TaskSpec &task, bool majority_label_policy) {
    const std::size_t labels = task.size();
    std::vector<double> total(labels, 0.0);
    double wsum = 0.0;
    for (std::size_t m = 0; m < scores.size(); ++m) {
        wsum += weights[m];
        for (std::size_t l = 0; l < labels; ++l) total[l] += weights[m] * scores[m][l];
    }
    double top = total[0];
    for (const double t : total) top = t > top ? t : top;
    std::vector<bool> tied(labels, false);
    std::size_t n_tied = 0;
    std::size_t first = labels;
    for (std::size_t l = 0; l < labels; ++l) {
        if (top - total[l] <= 1e-9 * wsum) {
            tied[l] = true;
            ++n_tied;
            if (first == labels) first = l;
        }
    }
    if (n_tied == 1) return task.labels()[first];
    if (majority_label_policy) return task.majority_label();
    std::size_t pick = votes.size();
    for (std::size_t m = 0; m < votes.size(); ++m) {
        if (tied[votes[m]] && (pick == votes.size() || weights[m] > weights[pick])) pick = m;
    }
    return task.labels()[pick == votes.size() ? first : votes[pick]];
}

struct OracleMetrics {
    std::vector<double> precision, recall, f1;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    double accuracy = 0.0;
};

/// Per-class counting from scratch: tp/fp/fn by direct comparison.
inline OracleMetrics oracle_metrics(const std::vector<std::size_t> &gold, const std::vector<std::size_t> &pred, std::size_t labels) {
    OracleMetrics m;
    double correct = 0.0;
    for (std::size_t i = 0; i < gold.size(); ++i) correct += gold[i] == pred[i] ? 1.0 : 0.0;
    m.accuracy = gold.empty() ? 0.0 : correct / static_cast<double>(gold.size());
    for (std::size_t c = 0; c < labels; ++c) {
        double tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (gold[i] == c) support += 1;
            if (pred[i] == c && gold[i] == c) tp += 1;
            if (pred[i] == c && gold[i] != c) fp += 1;
            if (pred[i] != c && gold[i] == c) fn += 1;
        }
        const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
        m.precision.push_back(p);
        m.recall.push_back(r);
        m.f1.push_back(f);
        m.macro_f1 += f / static_cast<double>(labels);
        if (!gold.empty()) m.weighted_f1 += f * support / static_cast<double>(gold.size());
    }
    return m;
}

}  // namespace stancekit::testing
