#include "oracles.hpp"
#include "support.hpp"

#include "stancekit/ensemble.hpp"
#include "stancekit/error.hpp"

#include <doctest.h>

using namespace stancekit;
using stancekit::testing::oracle_majority;
using stancekit::testing::oracle_weighted;

namespace {

const TaskSpec &task_c() { return TaskSpec::builtin(TaskId::C); }

EnsembleConfig config_of(const std::vector<double> &weights, VoteMode mode = VoteMode::weighted,
                         TieBreak tie = TieBreak::highest_weight_member) {
    EnsembleConfig cfg;
    cfg.mode = mode;
    cfg.tie_break = tie;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        cfg.members.push_back({"m" + std::to_string(i), weights[i]});
    }
    return cfg;
}

std::vector<double> dirichlet(Rng &rng, std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto &x : v) {
        x = -std::log(1.0 - rng.uniform());
        s += x;
    }
    for (auto &x : v) x /= s;
    return v;
}

PredictionSet member_set(const std::string &key, const std::vector<std::string> &labels, const TaskSpec &task) {
    PredictionSet s;
    s.model_key = key;
    s.task = task.id();
    s.split = Split::test;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        s.rows.push_back({"t" + std::to_string(i), labels[i], std::nullopt});
    }
    return s;
}

}  // namespace

TEST_CASE("majority vote matches the oracle on all 27 triples, both policies") {
    const auto &task = task_c();
    for (const bool label_policy : {false, true}) {
        const auto cfg = config_of({0.2, 0.5, 0.3}, VoteMode::majority,
                                   label_policy ? TieBreak::majority_label : TieBreak::highest_weight_member);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                for (std::size_t c = 0; c < 3; ++c) {
                    const std::vector<std::string> votes{task.labels()[a], task.labels()[b], task.labels()[c]};
                    CAPTURE(a);
                    CAPTURE(b);
                    CAPTURE(c);
                    CHECK(majority_vote(votes, cfg, task) == oracle_majority({a, b, c}, {0.2, 0.5, 0.3}, task, label_policy));
                }
            }
        }
    }
}

TEST_CASE("hand-worked tie cases") {
    const auto &task = task_c();
    const std::vector<std::string> all_differ{"OPPOSE", "NEUTRAL", "SUPPORT"};
    CHECK(majority_vote(all_differ, config_of({1, 1, 1}, VoteMode::majority), task) == "OPPOSE");
    CHECK(majority_vote(all_differ, config_of({1, 3, 1}, VoteMode::majority), task) == "NEUTRAL");
    CHECK(majority_vote(all_differ, config_of({1, 3, 1}, VoteMode::majority, TieBreak::majority_label), task) == "SUPPORT");
    const std::vector<std::string> two_one{"OPPOSE", "NEUTRAL", "OPPOSE"};
    CHECK(majority_vote(two_one, config_of({0.1, 5, 0.1}, VoteMode::majority), task) == "OPPOSE");
}

TEST_CASE("weighted vote matches the brute-force oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n_labels = 2 + rng.below(2);
        const std::size_t n_members = 2 + rng.below(4);
        const TaskSpec &task = n_labels == 2 ? TaskSpec::builtin(TaskId::A) : task_c();
        std::vector<double> weights;
        for (std::size_t m = 0; m < n_members; ++m) {
            // small integers produce exact ties often enough to exercise them
            weights.push_back(rng.below(2) == 0 ? static_cast<double>(rng.below(4)) : rng.uniform());
        }
        if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) weights[0] = 1.0;
        const bool label_policy = rng.below(2) == 1;
        const bool one_hot = rng.below(2) == 1;
        auto cfg = config_of(weights, VoteMode::weighted, label_policy ? TieBreak::majority_label : TieBreak::highest_weight_member);
        std::vector<MemberVote> votes;
        std::vector<std::vector<double>> scores;
        std::vector<std::size_t> hard;
        for (std::size_t m = 0; m < n_members; ++m) {
            std::vector<double> s = one_hot ? std::vector<double>(n_labels, 0.0) : dirichlet(rng, n_labels);
            std::size_t v = 0;
            if (one_hot) {
                v = rng.below(n_labels);
                s[v] = 1.0;
            } else {
                v = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
            }
            hard.push_back(v);
            scores.push_back(s);
            votes.push_back({task.labels()[v], one_hot ? std::vector<double>{} : s});
        }
        CAPTURE(trial);
        REQUIRE(weighted_vote(votes, cfg, task) == oracle_weighted(scores, hard, weights, task, label_policy));
    }
}

TEST_CASE("equal weights on one-hot votes reduce to majority vote") {
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n_members = 2 + rng.below(5);
        const TaskSpec &task = rng.below(2) == 0 ? TaskSpec::builtin(TaskId::A) : task_c();
        const auto tie = rng.below(2) == 0 ? TieBreak::majority_label : TieBreak::highest_weight_member;
        std::vector<std::string> labels;
        std::vector<MemberVote> votes;
        for (std::size_t m = 0; m < n_members; ++m) {
            labels.push_back(task.labels()[rng.below(task.size())]);
            votes.push_back({labels.back(), {}});
        }
        const std::vector<double> w(n_members, 1.0);
        REQUIRE(weighted_vote(votes, config_of(w, VoteMode::weighted, tie), task) ==
                majority_vote(labels, config_of(w, VoteMode::majority, tie), task));
    }
}

TEST_CASE("weighted vote properties: scale, permutation, dominance") {
    Rng rng(99);
    const auto &task = task_c();
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 3 + rng.below(2);
        std::vector<double> w;
        std::vector<MemberVote> votes;
        for (std::size_t m = 0; m < n; ++m) {
            w.push_back(0.1 + rng.uniform());
            auto s = dirichlet(rng, 3);
            const auto v = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
            votes.push_back({task.labels()[v], s});
        }
        const std::string base = weighted_vote(votes, config_of(w), task);

        auto scaled = w;
        for (auto &x : scaled) x *= 4.0;   // power of two keeps sums exact
        CHECK(weighted_vote(votes, config_of(scaled), task) == base);

        // reversing members and weights together leaves totals unchanged; the
        // member tie policy depends on order, so compare under majority_label
        auto rw = w;
        auto rv = votes;
        std::reverse(rw.begin(), rw.end());
        std::reverse(rv.begin(), rv.end());
        CHECK(weighted_vote(votes, config_of(w, VoteMode::weighted, TieBreak::majority_label), task) ==
              weighted_vote(rv, config_of(rw, VoteMode::weighted, TieBreak::majority_label), task));

        // one member holding more than half the weight with a one-hot vote wins
        auto dom = w;
        double rest = 0.0;
        for (std::size_t m = 1; m < n; ++m) rest += dom[m];
        dom[0] = rest * 1.5;
        auto dv = votes;
        dv[0].scores.clear();
        CHECK(weighted_vote(dv, config_of(dom), task) == dv[0].label);
    }
}

TEST_CASE("member count and weight validation") {
    const auto &task = task_c();
    const std::vector<std::string> two{"OPPOSE", "SUPPORT"};
    CHECK_THROWS_AS((void)majority_vote(two, config_of({1, 1, 1}, VoteMode::majority), task), MemberCountMismatch);
    std::vector<MemberVote> votes{{"OPPOSE", {}}, {"SUPPORT", {}}};
    CHECK_THROWS_AS((void)weighted_vote(votes, config_of({1, -1}), task), NegativeWeight);
    CHECK_THROWS_AS(config_of({1, -0.5}).validate(), NegativeWeight);
    CHECK_THROWS_AS(config_of({1}).validate(), InvalidArgument);
    CHECK_THROWS_AS(config_of({0, 0}).validate(), InvalidArgument);
    auto dup = config_of({1, 1});
    dup.members[1].model_key = "m0";
    CHECK_THROWS_AS(dup.validate(), InvalidArgument);
}

TEST_CASE("presets and dev-F1 weights") {
    const auto e1 = EnsembleConfig::preset("ensemble1");
    REQUIRE(e1.members.size() == 3);
    CHECK(e1.members[0].model_key == "bertweet-large");
    CHECK(e1.members[1].model_key == "xlm-r");
    CHECK(e1.members[2].model_key == "fbert");
    const auto e2 = EnsembleConfig::preset("ensemble2");
    CHECK(e2.members[0].model_key == "hate-bert");
    CHECK(e2.mode == VoteMode::weighted);
    CHECK(e2.members[0].weight == e2.members[2].weight);
    CHECK_THROWS_AS((void)EnsembleConfig::preset("ensemble9"), InvalidArgument);

    const auto custom = EnsembleConfig::preset(
        "mine", Config::parse("ensemble.mine.members = a,b\nensemble.mine.weights = 0.25,0.75\nensemble.mine.mode = majority\n"));
    CHECK(custom.mode == VoteMode::majority);
    CHECK(custom.members[1].weight == 0.75);

    const std::vector<double> f1{0.5, 0.25, 0.25};
    const auto w = weights_from_dev_f1(f1);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.25));
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(weights_from_dev_f1(zeros) == std::vector<double>{0.5, 0.5});
}

TEST_CASE("ensemble_predictions joins by id and names the output") {
    const auto &task = TaskSpec::builtin(TaskId::A);
    auto cfg = EnsembleConfig::preset("ensemble2");
    std::vector<PredictionSet> sets{
        member_set("xlm-r", {"HATE", "NON-HATE", "HATE"}, task),
        member_set("hate-bert", {"HATE", "HATE", "NON-HATE"}, task),
        member_set("fbert", {"NON-HATE", "NON-HATE", "HATE"}, task),
    };
    // shuffle one member's rows; joining is by id
    std::swap(sets[2].rows[0], sets[2].rows[2]);
    const auto out = ensemble_predictions(sets, cfg, task);
    CHECK(out.model_key == "ensemble2:weighted[hate-bert+xlm-r+fbert]");
    REQUIRE(out.rows.size() == 3);
    CHECK(out.rows[0].id == "t0");
    CHECK(out.rows[0].label == "HATE");
    CHECK(out.rows[1].label == "NON-HATE");
    CHECK(out.rows[2].label == "HATE");
    CHECK(out.split == Split::test);

    sets[1].rows.pop_back();
    try {
        (void)ensemble_predictions(sets, cfg, task);
        FAIL("expected ExampleUniverseMismatch");
    } catch (const ExampleUniverseMismatch &e) {
        CHECK(e.ids() == std::vector<std::string>{"t2"});
    }
}
