// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include "oracles.hpp"
#include "support.hpp"
#include "table_fixtures.hpp"

#include "stancekit/augmentation.hpp"
#include "stancekit/cli.hpp"
#include "stancekit/ensemble.hpp"
#include "stancekit/evaluation.hpp"
#include "stancekit/prompt.hpp"
#include "stancekit/trainer.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace stancekit;
namespace st = stancekit::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

EnsembleConfig members_config(const std::vector<double> &weights, VoteMode mode, TieBreak tie) {
    EnsembleConfig cfg;
    cfg.mode = mode;
    cfg.tie_break = tie;
    for (std::size_t i = 0; i < weights.size(); ++i) cfg.members.push_back({"m" + std::to_string(i), weights[i]});
    return cfg;
}

std::vector<double> random_distribution(Rng &rng, std::size_t n) {
    std::vector<double> v(n);
    double s = 0.0;
    for (auto &x : v) {
        x = -std::log(1.0 - rng.uniform());
        s += x;
    }
    for (auto &x : v) x /= s;
    return v;
}

// 1 ---------------------------------------------------------------------------
Outcome ensemble_oracle() {
    const auto &task = TaskSpec::builtin(TaskId::C);
    std::size_t ties = 0;
    for (const bool label_policy : {false, true}) {
        const std::vector<double> weights{0.3, 0.5, 0.2};
        const auto cfg = members_config(weights, VoteMode::majority, label_policy ? TieBreak::majority_label : TieBreak::highest_weight_member);
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                for (std::size_t c = 0; c < 3; ++c) {
                    const std::vector<std::string> votes{task.labels()[a], task.labels()[b], task.labels()[c]};
                    ties += a != b && b != c && a != c ? 1 : 0;
                    const auto got = majority_vote(votes, cfg, task);
                    const auto want = st::oracle_majority({a, b, c}, weights, task, label_policy);
                    if (got != want) return fail(fmt::format("triple ({},{},{}): got {}, oracle {}", a, b, c, got, want));
                }
            }
        }
    }
    Rng rng(1);
    std::size_t weighted_ties = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n_labels = 2 + rng.below(2);
        const std::size_t n_members = 1 + rng.below(5);
        const TaskSpec &t = n_labels == 2 ? TaskSpec::builtin(TaskId::A) : task;
        std::vector<double> weights;
        for (std::size_t m = 0; m < n_members; ++m) weights.push_back(rng.below(3) == 0 ? static_cast<double>(1 + rng.below(3)) : rng.uniform());
        const bool label_policy = rng.below(2) == 1;
        const bool one_hot = rng.below(2) == 1;
        std::vector<MemberVote> votes;
        std::vector<std::vector<double>> scores;
        std::vector<std::size_t> hard;
        for (std::size_t m = 0; m < n_members; ++m) {
            std::vector<double> s(n_labels, 0.0);
            std::size_t v = 0;
            if (one_hot) {
                v = rng.below(n_labels);
                s[v] = 1.0;
            } else {
                s = random_distribution(rng, n_labels);
                v = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
            }
            hard.push_back(v);
            scores.push_back(s);
            votes.push_back({t.labels()[v], one_hot ? std::vector<double>{} : s});
        }
        const auto cfg = members_config(weights, VoteMode::weighted, label_policy ? TieBreak::majority_label : TieBreak::highest_weight_member);
        const auto got = weighted_vote(votes, cfg, t);
        const auto want = st::oracle_weighted(scores, hard, weights, t, label_policy);
        if (got != want) return fail(fmt::format("weighted instance {}: got {}, oracle {}", trial, got, want));
        const auto totals = weighted_totals(votes, cfg, t);
        const double top = *std::max_element(totals.begin(), totals.end());
        weighted_ties += std::count_if(totals.begin(), totals.end(), [&](double x) { return top - x <= 1e-12; }) > 1 ? 1 : 0;
    }
    return {true, fmt::format("54 triple checks ({} all-distinct ties), 1000 weighted instances ({} ties)", ties, weighted_ties)};
}

// 2 ---------------------------------------------------------------------------
Outcome reduction_law() {
    Rng rng(2);
    std::size_t ties = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t n_members = 1 + rng.below(7);
        const TaskSpec &task = rng.below(2) == 0 ? TaskSpec::builtin(TaskId::A) : TaskSpec::builtin(TaskId::B);
        const auto tie = rng.below(2) == 0 ? TieBreak::majority_label : TieBreak::highest_weight_member;
        std::vector<std::string> labels;
        std::vector<MemberVote> votes;
        std::vector<std::size_t> counts(task.size(), 0);
        for (std::size_t m = 0; m < n_members; ++m) {
            const auto l = rng.below(task.size());
            ++counts[l];
            labels.push_back(task.labels()[l]);
            votes.push_back({labels.back(), {}});
        }
        const auto top = *std::max_element(counts.begin(), counts.end());
        ties += std::count(counts.begin(), counts.end(), top) > 1 ? 1 : 0;
        const std::vector<double> w(n_members, 1.0);
        const auto weighted = weighted_vote(votes, members_config(w, VoteMode::weighted, tie), task);
        const auto majority = majority_vote(labels, members_config(w, VoteMode::majority, tie), task);
        if (weighted != majority) return fail(fmt::format("instance {}: weighted {} vs majority {}", trial, weighted, majority));
    }
    return {true, fmt::format("10000 instances, {} with ties", ties)};
}

// 3 ---------------------------------------------------------------------------
Outcome metric_oracle() {
    Rng rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const TaskSpec &task = TaskSpec::builtin(rng.below(2) == 0 ? TaskId::A : TaskId::C);
        const std::size_t n = 1 + rng.below(80);
        std::vector<std::size_t> g(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = rng.below(task.size());
            p[i] = rng.below(4) == 0 ? g[i] : rng.below(task.size());
        }
        const auto got = score_indices(g, p, task);
        const auto want = st::oracle_metrics(g, p, task.size());
        std::vector<double> diffs{got.macro_f1 - want.macro_f1, got.weighted_f1 - want.weighted_f1, got.accuracy - want.accuracy};
        for (std::size_t c = 0; c < task.size(); ++c) {
            diffs.push_back(got.per_class[c].precision - want.precision[c]);
            diffs.push_back(got.per_class[c].recall - want.recall[c]);
            diffs.push_back(got.per_class[c].f1 - want.f1[c]);
        }
        for (const double d : diffs) worst = std::max(worst, std::abs(d));
        if (worst > 1e-12) return fail(fmt::format("instance {} differs by {}", trial, worst));
    }
    const std::vector<LabeledExample> gold{st::example("1", "a", "HATE"), st::example("2", "b", "HATE"), st::example("3", "c", "NON-HATE"),
                                           st::example("4", "d", "NON-HATE")};
    PredictionSet pred;
    pred.rows = {{"1", "HATE", std::nullopt}, {"2", "NON-HATE", std::nullopt}, {"3", "NON-HATE", std::nullopt}, {"4", "NON-HATE", std::nullopt}};
    const double macro = score(gold, pred, TaskSpec::builtin(TaskId::A)).macro_f1;
    if (std::abs(macro - 0.7333) > 0.0001) return fail(fmt::format("fixture macro F1 {}", macro));
    return {true, fmt::format("max deviation {:.1e}; fixture macro F1 {}", worst, format_four_decimals(macro))};
}

// 4 ---------------------------------------------------------------------------
Outcome distribution_audit() {
    const auto &task = TaskSpec::builtin(TaskId::A);
    const auto &fixture = st::table_fixtures()[0].splits[0];
    const auto xs = st::counted_examples(task, Split::train, fixture.counts);
    const auto table = format_distribution(distribution(xs, task));
    const std::string want = "Label\tTrain\nNON-HATE\t87.66\nHATE\t12.34\n";
    if (table != want) return fail("table was:\n" + table);
    return {true, fmt::format("{} NON-HATE / {} HATE -> 87.66 / 12.34", fixture.counts[0], fixture.counts[1])};
}

// 5 ---------------------------------------------------------------------------
Outcome augmentation_arithmetic() {
    const auto &task = TaskSpec::builtin(TaskId::A);
    std::vector<LabeledExample> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(st::example("e" + std::to_string(i), "tweet " + std::to_string(i), i % 5 == 0 ? "HATE" : "NON-HATE"));
    TaggingTranslator tag;
    const auto result = augment_training_set(xs, task, builtin_chains(), tag);
    if (result.examples.size() != 18) return fail(fmt::format("{} examples", result.examples.size()));
    std::size_t majority_copies = 0;
    for (std::size_t i = 0; i < result.examples.size(); ++i) {
        const auto &e = result.examples[i];
        if (i < 10 && !(e == xs[i])) return fail("original " + e.id + " changed");
        if (i >= 10) {
            const std::string source = e.id.substr(0, e.id.find("~bt:"));
            const auto it = std::find_if(xs.begin(), xs.end(), [&](const LabeledExample &x) { return x.id == source; });
            if (it == xs.end() || it->label != e.label) return fail("copy " + e.id + " lost its label");
            majority_copies += e.label == task.majority_label() ? 1 : 0;
        }
    }
    if (majority_copies != 0) return fail(fmt::format("{} majority copies", majority_copies));

    ReversingTranslator rev;
    const auto ex = st::example("r", "An asymmetric sentence.", "HATE");
    for (std::size_t pivots = 1; pivots <= 5; pivots += 2) {
        std::vector<std::string> langs;
        for (std::size_t i = 0; i < pivots; ++i) langs.push_back("p" + std::to_string(i));
        const auto chain = AugmentationChain::make("even", langs);
        if (back_translate(ex, chain, rev).text != ex.text) return fail(fmt::format("{}-hop reversal did not round-trip", pivots + 1));
    }
    return {true, "10 -> 18 examples, 0 majority copies; 2/4/6-hop reversals round-trip"};
}

// 6 ---------------------------------------------------------------------------
Outcome prompt_round_trip() {
    std::size_t checked = 0;
    for (const TaskId id : {TaskId::A, TaskId::B, TaskId::C}) {
        const auto &task = TaskSpec::builtin(id);
        for (const auto &label : task.labels()) {
            for (const std::string closer : {"<\\label>", "</label>"}) {
                const std::string response = "<label> " + label + " " + closer;
                const auto parsed = parse_label(response, task);
                const auto *got = std::get_if<std::string>(&parsed);
                if (got == nullptr || *got != label) return fail("could not parse " + response);
                ++checked;
            }
        }
        const auto prompt = build_prompt(task, "example input", 0, {}, 42);
        if (prompt.find("You are a helpful AI assistant") == std::string::npos) return fail("zero-shot prompt lacks the role sentence");
        for (const auto &label : task.labels()) {
            if (prompt.find(label) == std::string::npos) return fail("zero-shot prompt for " + task.name() + " lacks " + label);
        }
    }
    return {true, fmt::format("{} tagged responses parsed; 3 zero-shot prompts complete", checked)};
}

// 7 ---------------------------------------------------------------------------
Outcome trainer_sanity() {
    const auto &task = TaskSpec::builtin(TaskId::A);
    const auto data = st::separable_corpus(task, {16, 16}, 7);
    ModelRegistry registry;
    registry.set("tiny", "tiny:");
    const auto entry = registry.entry("tiny", task);
    const TrainConfig cfg;
    const auto result = fine_tune(data, data, task, entry, cfg);
    const double f1 = score(data, predict(result.model, data, task, cfg), task).macro_f1;
    if (result.trace.size() != 5) return fail(fmt::format("{} epochs ran", result.trace.size()));
    if (f1 < 0.95) return fail(fmt::format("train macro F1 {:.4f} after 5 epochs", f1));

    TrainConfig none = cfg;
    none.epochs = 0;
    const auto init = fine_tune(data, data, task, entry, none);
    if (!(init.model == TextClassifier(entry, task, TinyEncoderSpec::parse(entry.encoder_ref), cfg.seed)) || !init.trace.empty()) {
        return fail("epochs = 0 did not return the initialised model");
    }
    return {true, fmt::format("train macro F1 {:.4f} at lr {:g}, batch {}, {} epochs; epochs=0 returns init", f1, cfg.learning_rate,
                              cfg.train_batch, cfg.epochs)};
}

// 8 ---------------------------------------------------------------------------
std::map<std::string, std::string> run_pipeline(const st::TempDir &dir) {
    const auto &task = TaskSpec::builtin(TaskId::A);
    auto p = [&](const std::string &name) { return (dir.path() / name).string(); };
    write_dataset(std::filesystem::path(p("train.csv")), st::separable_corpus(task, {24, 8}, 21, Split::train, "tr"), false);
    write_dataset(std::filesystem::path(p("dev.csv")), st::separable_corpus(task, {12, 4}, 22, Split::eval, "dv"), false);
    write_dataset(std::filesystem::path(p("test.csv")), st::separable_corpus(task, {12, 4}, 23, Split::test, "te"), false);
    st::write_file(p("run.cfg"),
                   "seed = 13\n"
                   "model.hate-bert.encoder = tiny:buckets=256,dim=8,hidden=8\n"
                   "model.xlm-r.encoder = tiny:buckets=512,dim=16,hidden=8\n"
                   "model.fbert.encoder = tiny:buckets=1024,dim=8,hidden=16\n"
                   "train.epochs = 3\n");

    std::vector<std::vector<std::string>> steps{
        {"augment", "--task", "A", "--train", p("train.csv"), "--out", p("aug.csv"), "--summary", p("aug.json"), "--max-in-flight", "3"}};
    std::vector<std::string> members;
    for (const std::string key : {"hate-bert", "xlm-r", "fbert"}) {
        steps.push_back({"train", "--task", "A", "--model", key, "--train", p("aug.csv"), "--dev", p("dev.csv"), "--runs-dir", p("runs"),
                         "--run-id", "fixed"});
        steps.push_back({"predict", "--task", "A", "--checkpoint", p("runs/A/" + key + "/fixed"), "--input", p("test.csv"), "--split", "test",
                         "--out", p(key + ".jsonl")});
        members.push_back(p(key + ".jsonl"));
    }
    std::vector<std::string> ensemble{"ensemble", "--preset", "ensemble2", "--out", p("ens.jsonl"), "--in"};
    ensemble.insert(ensemble.end(), members.begin(), members.end());
    steps.push_back(ensemble);
    steps.push_back({"evaluate", "--task", "A", "--gold", p("test.csv"), "--pred", p("ens.jsonl"), "--out", p("metrics.json"), "--figure",
                     p("cm.png")});

    std::map<std::string, std::string> artifacts;
    for (auto step : steps) {
        step.insert(step.begin(), {"--config", p("run.cfg"), "--manifest", p("manifest.jsonl")});
        std::ostringstream out, err;
        if (const int code = run_cli(step, out, err); code != 0) {
            throw std::runtime_error(step[4] + " exited " + std::to_string(code) + ": " + err.str());
        }
        artifacts["stdout:" + step[4]] += out.str();
    }
    for (const auto &entry : std::filesystem::recursive_directory_iterator(dir.path())) {
        if (entry.is_regular_file() && entry.path().filename() != "manifest.jsonl") {
            artifacts[std::filesystem::relative(entry.path(), dir.path()).string()] = st::read_file(entry.path());
        }
    }
    // stdout echoes absolute paths, which differ between the two scratch dirs
    for (auto &[name, contents] : artifacts) {
        if (name.rfind("stdout:", 0) == 0) {
            for (auto pos = contents.find(dir.path().string()); pos != std::string::npos; pos = contents.find(dir.path().string())) {
                contents.replace(pos, dir.path().string().size(), "<dir>");
            }
        }
    }
    return artifacts;
}

Outcome pipeline_determinism() {
    const st::TempDir first("accept-a");
    const st::TempDir second("accept-b");
    const auto a = run_pipeline(first);
    const auto b = run_pipeline(second);
    if (a.size() != b.size()) return fail(fmt::format("{} vs {} artifacts", a.size(), b.size()));
    std::size_t bytes = 0;
    for (const auto &[name, contents] : a) {
        const auto it = b.find(name);
        if (it == b.end()) return fail(name + " missing from the second run");
        if (it->second != contents) return fail(name + " differs between runs");
        bytes += contents.size();
    }
    return {true, fmt::format("{} artifacts, {} bytes identical across runs", a.size(), bytes)};
}

// 9 ---------------------------------------------------------------------------
Outcome ensemble_helps() {
    const auto &task = TaskSpec::builtin(TaskId::A);
    // 160 NON-HATE, 40 HATE
    std::vector<LabeledExample> gold;
    for (int i = 0; i < 200; ++i) gold.push_back(st::example("s" + std::to_string(i), "synthetic", i % 5 == 0 ? "HATE" : "NON-HATE", Split::test));

    // each member is wrong on its own third of a subset, with a different bias
    auto member = [&](const std::string &key, std::size_t slot) {
        PredictionSet s;
        s.model_key = key;
        s.task = TaskId::A;
        s.split = Split::test;
        for (std::size_t i = 0; i < gold.size(); ++i) {
            const bool hate = *gold[i].label == "HATE";
            bool wrong = false;
            switch (slot) {
                case 0: wrong = hate && i % 3 == 0; break;                 // misses hate: majority bias
                case 1: wrong = !hate && i % 12 == 1; break;               // over-flags: minority bias
                case 2: wrong = (hate && i % 3 == 2) || (!hate && i % 12 == 2); break;
            }
            const bool says_hate = hate != wrong;
            const double p = 0.7 + 0.02 * static_cast<double>(i % 10);
            const std::vector<double> scores = says_hate ? std::vector<double>{1 - p, p} : std::vector<double>{p, 1 - p};
            s.rows.push_back({gold[i].id, says_hate ? "HATE" : "NON-HATE", scores});
        }
        return s;
    };
    const std::vector<PredictionSet> sets{member("hate-bert", 0), member("xlm-r", 1), member("fbert", 2)};
    const auto combined = ensemble_predictions(sets, EnsembleConfig::preset("ensemble2"), task);
    const double ens = score(gold, combined, task).macro_f1;
    std::string detail = "members";
    for (const auto &s : sets) {
        const double f = score(gold, s, task).macro_f1;
        detail += fmt::format(" {}={:.4f}", s.model_key, f);
        if (!(ens > f)) return fail(fmt::format("ensemble {:.4f} does not beat {} {:.4f}", ens, s.model_key, f));
    }
    return {true, fmt::format("{}; ensemble2={:.4f}", detail, ens)};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> check;
        double limit_seconds;   ///< zero: no time bound
    };
    const std::vector<Criterion> criteria{
        {1, "ensemble oracle equivalence", ensemble_oracle, 1.0},
        {2, "weighted/majority reduction law", reduction_law, 5.0},
        {3, "metric oracle equivalence", metric_oracle, 0.0},
        {4, "distribution audit", distribution_audit, 0.0},
        {5, "augmentation arithmetic", augmentation_arithmetic, 0.0},
        {6, "prompt round trip", prompt_round_trip, 0.0},
        {7, "trainer sanity", trainer_sanity, 120.0},
        {8, "pipeline determinism", pipeline_determinism, 0.0},
        {9, "ensemble beats its members", ensemble_helps, 0.0},
    };
    int failures = 0;
    for (const auto &c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception &e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.pass && c.limit_seconds > 0.0 && seconds >= c.limit_seconds) {
            o = fail(fmt::format("took {:.2f} s, limit {:.0f} s", seconds, c.limit_seconds));
        }
        failures += o.pass ? 0 : 1;
        std::cout << fmt::format("{} criterion {}: {} ({:.2f} s) - {}", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds, o.detail) << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failures), criteria.size()) << std::endl;
    return failures == 0 ? 0 : 1;
}
