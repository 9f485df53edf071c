#include "stancekit/cli.hpp"

#include "stancekit/augmentation.hpp"
#include "stancekit/config.hpp"
#include "stancekit/corpus.hpp"
#include "stancekit/ensemble.hpp"
#include "stancekit/error.hpp"
#include "stancekit/evaluation.hpp"
#include "stancekit/http_clients.hpp"
#include "stancekit/manifest.hpp"
#include "stancekit/predictions.hpp"
#include "stancekit/prompt.hpp"
#include "stancekit/text.hpp"
#include "stancekit/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <memory>

namespace stancekit {

namespace {

namespace fs = std::filesystem;

std::optional<std::string> env(const char *name) {
    if (const char *v = std::getenv(name); v != nullptr && *v != '\0') {
        return std::string(v);
    }
    return std::nullopt;
}

/// Resolution order for every setting: flag, environment, config file, default.
class Settings {
public:
    explicit Settings(Config cfg) : cfg_(std::move(cfg)) {}

    [[nodiscard]] const Config &config() const noexcept { return cfg_; }

    [[nodiscard]] std::string str(const std::optional<std::string> &flag, const char *env_name, std::string_view key,
                                  std::string_view fallback) const {
        if (flag) return *flag;
        if (env_name != nullptr) {
            if (auto v = env(env_name)) return *v;
        }
        return cfg_.get_or(key, fallback);
    }

    [[nodiscard]] double real(const std::optional<double> &flag, std::string_view key, double fallback) const {
        if (flag) return *flag;
        return cfg_.get_double(key).value_or(fallback);
    }

    [[nodiscard]] std::size_t count(const std::optional<std::size_t> &flag, std::string_view key, std::size_t fallback) const {
        if (flag) return *flag;
        if (const auto v = cfg_.get_int(key)) {
            if (*v < 0) throw InvalidArgument(std::string(key) + " must be non-negative");
            return static_cast<std::size_t>(*v);
        }
        return fallback;
    }

private:
    Config cfg_;
};

struct Globals {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> manifest;
    bool verbose = false;
};

struct Context {
    Settings settings;
    std::uint64_t seed;
    fs::path manifest_path;
    RunManifest manifest;
    std::ostream &out;

    void input(const fs::path &p) {
        if (!fs::exists(p)) {
            throw MissingFile(p.string());
        }
        manifest.add_input(p);
    }
    void artifact(const fs::path &p) { manifest.artifacts.push_back(p.string()); }
};

const TaskSpec &task_of(const std::string &flag) {
    return TaskSpec::builtin(parse_task_id(flag));
}

std::vector<LabeledExample> load(Context &ctx, const fs::path &path, const TaskSpec &task, Split split) {
    ctx.input(path);
    return load_dataset(path, task, split);
}

void ensure_parent(const fs::path &p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
}

void write_text(const fs::path &p, const std::string &contents) {
    ensure_parent(p);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw UnwritablePath(p.string());
    }
    f << contents;
    if (!f) {
        throw UnwritablePath(p.string());
    }
}

// ---- stats ------------------------------------------------------------------

struct StatsArgs {
    std::string task;
    std::optional<std::string> train, eval, test, out;
    bool counts = false;
    std::string delimiter = "tab";
};

void run_stats(Context &ctx, const StatsArgs &a) {
    const TaskSpec &task = task_of(a.task);
    ctx.manifest.task = a.task;
    std::vector<LabeledExample> all;
    const std::pair<const std::optional<std::string> *, Split> files[] = {{&a.train, Split::train}, {&a.eval, Split::eval}, {&a.test, Split::test}};
    for (const auto &[file, split] : files) {
        if (*file) {
            auto part = load(ctx, **file, task, split);
            all.insert(all.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
    }
    if (all.empty() && !a.train && !a.eval && !a.test) {
        throw InvalidArgument("stats needs at least one of --train, --eval, --test");
    }
    const char delim = a.delimiter == "comma" ? ',' : '\t';
    const std::string table = format_distribution(distribution(all, task), delim, a.counts);
    ctx.out << table;
    if (a.out) {
        write_text(*a.out, table);
        ctx.artifact(*a.out);
    }
}

// ---- augment ----------------------------------------------------------------

struct AugmentArgs {
    std::string task;
    std::string train;
    std::string out;
    std::optional<std::string> translator, summary;
    std::optional<std::size_t> max_copies, max_in_flight;
    std::optional<std::string> endpoint;
};

std::unique_ptr<TranslationClient> make_translator(const Context &ctx, const AugmentArgs &a) {
    const std::string kind = ctx.settings.str(a.translator, nullptr, "mt.backend", "mock");
    if (kind == "mock") return std::make_unique<TaggingTranslator>();
    if (kind == "identity") return std::make_unique<IdentityTranslator>();
    if (kind == "reverse") return std::make_unique<ReversingTranslator>();
    if (kind == "http") {
        const std::string endpoint = ctx.settings.str(a.endpoint, "STANCEKIT_MT_ENDPOINT", "mt.endpoint", "");
        if (endpoint.empty()) {
            throw InvalidArgument("http translator needs --endpoint, STANCEKIT_MT_ENDPOINT or mt.endpoint");
        }
        return std::make_unique<HttpTranslator>(endpoint, env("STANCEKIT_MT_KEY").value_or(""),
                                                ctx.settings.real(std::nullopt, "mt.requests_per_second", 0.0));
    }
    throw InvalidArgument("unknown translator '" + kind + "' (mock, identity, reverse, http)");
}

void run_augment(Context &ctx, const AugmentArgs &a) {
    const TaskSpec &task = task_of(a.task);
    ctx.manifest.task = a.task;
    const auto train = load(ctx, a.train, task, Split::train);
    std::vector<AugmentationChain> chains = chains_from_config(ctx.settings.config());
    if (chains.empty()) {
        chains = builtin_chains();
    }
    auto client = make_translator(ctx, a);
    AugmentOptions opts;
    opts.max_in_flight = ctx.settings.count(a.max_in_flight, "mt.max_in_flight", 1);
    if (a.max_copies) {
        opts.max_copies_per_example = *a.max_copies;
    } else if (const auto cap = ctx.settings.config().get_int("augment.max_copies")) {
        opts.max_copies_per_example = static_cast<std::size_t>(*cap);
    }
    opts.retry.base_delay = std::chrono::milliseconds(ctx.settings.count(std::nullopt, "augment.retry_base_ms", 200));
    const AugmentResult result = augment_training_set(train, task, chains, *client, opts);

    ensure_parent(a.out);
    write_dataset(fs::path(a.out), result.examples, true);
    ctx.artifact(a.out);
    if (a.summary) {
        write_text(*a.summary, result.summary_json().dump(2) + "\n");
        ctx.artifact(*a.summary);
    }
    const auto report = distribution(result.examples, task);
    ctx.out << fmt::format("wrote {} examples ({} original, {} augmented) to {}\n", result.examples.size(), train.size(),
                           result.examples.size() - train.size(), a.out);
    ctx.out << format_distribution(report, '\t', true);
}

// ---- train / predict ----------------------------------------------------------

struct TrainArgs {
    std::string task;
    std::string model;
    std::string train;
    std::string dev;
    std::optional<std::string> runs_dir, run_id, encoder;
    std::optional<std::size_t> epochs, batch;
    std::optional<double> lr;
};

TrainConfig train_config(const Context &ctx) {
    TrainConfig cfg = TrainConfig::from_config(ctx.settings.config());
    cfg.seed = ctx.seed;
    return cfg;
}

void run_train(Context &ctx, const TrainArgs &a) {
    const TaskSpec &task = task_of(a.task);
    ctx.manifest.task = a.task;
    const auto train = load(ctx, a.train, task, Split::train);
    const auto dev = load(ctx, a.dev, task, Split::eval);

    TrainConfig cfg = train_config(ctx);
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.batch) cfg.train_batch = *a.batch;
    if (a.lr) cfg.learning_rate = *a.lr;
    cfg.validate();

    ModelRegistry registry = ModelRegistry::from_config(ctx.settings.config());
    if (a.encoder) {
        registry.set(a.model, *a.encoder);
    }
    const ModelEntry entry = registry.entry(a.model, task);
    const FineTuneResult result = fine_tune(train, dev, task, entry, cfg);

    const fs::path runs = ctx.settings.str(a.runs_dir, nullptr, "runs.dir", "runs");
    const fs::path dir = runs / std::string(to_string(task.id())) / a.model / a.run_id.value_or(ctx.manifest.run_id);
    save_checkpoint(dir, result, cfg);
    const bool augmented = std::any_of(train.begin(), train.end(), [](const LabeledExample &e) { return e.origin == Origin::augmented; });
    write_text(dir / "checkpoint.json", nlohmann::ordered_json{{"model_key", a.model}, {"task", to_string(task.id())}, {"augmented", augmented}}.dump(2) + "\n");
    ctx.artifact(dir / "model.bin");
    ctx.artifact(dir / "trace.json");
    ctx.artifact(dir / "checkpoint.json");
    for (const auto &e : result.trace) {
        ctx.out << fmt::format("epoch {}: train_loss={:.6f} dev_macro_f1={:.4f}\n", e.epoch, e.train_loss, e.dev_macro_f1);
    }
    if (result.best_epoch) {
        ctx.out << fmt::format("best epoch {} dev_macro_f1={:.4f}\n", *result.best_epoch, *result.best_dev_f1);
    }
    ctx.out << "checkpoint " << dir.string() << "\n";
}

struct PredictArgs {
    std::string task;
    std::string checkpoint;
    std::string input;
    std::string out;
    std::string split = "eval";
};

void run_predict(Context &ctx, const PredictArgs &a) {
    const TaskSpec &task = task_of(a.task);
    ctx.manifest.task = a.task;
    fs::path model_file = a.checkpoint;
    if (fs::is_directory(model_file)) {
        model_file /= "model.bin";
    }
    ctx.input(model_file);
    const TextClassifier model = TextClassifier::load(model_file);
    const Split split = parse_split(a.split);
    const auto examples = load(ctx, a.input, task, split);
    const TrainConfig cfg = train_config(ctx);
    PredictionSet set = predict(model, examples, task, cfg, split);
    bool augmented = false;
    if (const fs::path info = model_file.parent_path() / "checkpoint.json"; fs::exists(info)) {
        std::ifstream f(info);
        augmented = nlohmann::json::parse(f).value("augmented", false);
    }
    set.metadata["augmented"] = augmented ? "true" : "false";
    set.metadata["checkpoint_policy"] = "best_dev_macro_f1";
    ensure_parent(a.out);
    write_predictions(a.out, set, task);
    ctx.artifact(a.out);
    ctx.artifact(metadata_path(a.out));
    ctx.out << fmt::format("wrote {} predictions to {}\n", set.rows.size(), a.out);
}

// ---- prompt -----------------------------------------------------------------

struct PromptArgs {
    std::string task;
    std::string input;
    std::string out;
    std::string split = "test";
    std::optional<std::string> pool, log, llm, model, endpoint;
    std::size_t shots = 0;
    std::optional<std::size_t> max_in_flight;
};

void run_prompt(Context &ctx, const PromptArgs &a) {
    const TaskSpec &task = task_of(a.task);
    ctx.manifest.task = a.task;
    const auto examples = load(ctx, a.input, task, parse_split(a.split));
    std::vector<LabeledExample> pool;
    if (a.pool) {
        pool = load(ctx, *a.pool, task, Split::train);
    } else if (a.shots > 0) {
        throw InvalidArgument("--shots > 0 needs an exemplar --pool");
    }

    std::unique_ptr<LLMClient> client;
    const std::string kind = ctx.settings.str(a.llm, nullptr, "llm.backend", "mock");
    if (kind == "mock") {
        client = std::make_unique<HashingMockLLM>(task);
    } else if (kind == "http") {
        const std::string endpoint = ctx.settings.str(a.endpoint, "STANCEKIT_LLM_ENDPOINT", "llm.endpoint", "");
        if (endpoint.empty()) {
            throw InvalidArgument("http LLM backend needs --endpoint, STANCEKIT_LLM_ENDPOINT or llm.endpoint");
        }
        client = std::make_unique<ChatCompletionClient>(endpoint, env("STANCEKIT_LLM_KEY").value_or(""),
                                                        ctx.settings.str(a.model, "STANCEKIT_LLM_MODEL", "llm.model", "gpt-3.5-turbo"),
                                                        ctx.settings.real(std::nullopt, "llm.temperature", 0.0));
    } else {
        throw InvalidArgument("unknown LLM backend '" + kind + "' (mock, http)");
    }

    ClassifyOptions opts;
    opts.shots = a.shots;
    opts.seed = ctx.seed;
    opts.max_in_flight = ctx.settings.count(a.max_in_flight, "llm.max_in_flight", 1);
    opts.wording = wording_from_config(ctx.settings.config(), task);
    std::ofstream log_file;
    if (a.log) {
        ensure_parent(*a.log);
        log_file.open(*a.log, std::ios::binary | std::ios::trunc);
        if (!log_file) {
            throw UnwritablePath(*a.log);
        }
        opts.log = &log_file;
    }

    ensure_parent(a.out);
    auto persist = [&](PredictionSet &set) {
        set.metadata["augmented"] = "false";
        write_predictions(a.out, set, task);
        ctx.artifact(a.out);
        ctx.artifact(metadata_path(a.out));
        if (a.log) {
            log_file.flush();
            ctx.artifact(*a.log);
        }
    };
    try {
        PredictionSet set = classify_with_llm(examples, task, *client, pool, opts);
        persist(set);
        ctx.out << fmt::format("wrote {} predictions to {} (fallbacks: {})\n", set.rows.size(), a.out, set.metadata.at("fallback_count"));
    } catch (const ClassificationAborted &e) {
        PredictionSet partial = e.partial();
        persist(partial);
        throw;
    }
}

// ---- ensemble ---------------------------------------------------------------

struct EnsembleArgs {
    std::optional<std::string> preset, members, mode, tie_break, weights, task, dev_gold;
    std::vector<std::string> in;
    std::vector<std::string> dev_in;
    std::optional<std::string> out;
};

std::vector<double> parse_weights(const std::string &s) {
    std::vector<double> w;
    for (const auto &part : text::split(s, ',')) {
        try {
            w.push_back(std::stod(std::string(text::trim(part))));
        } catch (const std::exception &) {
            throw InvalidArgument("bad weight '" + part + "'");
        }
    }
    return w;
}

void run_ensemble(Context &ctx, const EnsembleArgs &a) {
    std::vector<PredictionSet> sets;
    for (const auto &p : a.in) {
        ctx.input(p);
        ctx.input(metadata_path(p));
        sets.push_back(read_predictions(p));
    }
    if (sets.empty()) {
        throw InvalidArgument("ensemble needs --in prediction files");
    }
    const TaskSpec &task = a.task ? task_of(*a.task) : TaskSpec::builtin(sets.front().task);
    ctx.manifest.task = std::string(to_string(task.id()));

    EnsembleConfig cfg;
    if (a.preset) {
        cfg = EnsembleConfig::preset(*a.preset, ctx.settings.config());
    } else if (a.members) {
        cfg.name = "";
        for (const auto &k : text::split(*a.members, ',')) {
            cfg.members.push_back({std::string(text::trim(k)), 1.0});
        }
    } else {
        for (const auto &s : sets) {
            cfg.members.push_back({s.model_key, 1.0});
        }
    }
    if (a.mode) cfg.mode = parse_vote_mode(*a.mode);
    if (a.tie_break) cfg.tie_break = parse_tie_break(*a.tie_break);

    if (a.weights) {
        const auto w = parse_weights(*a.weights);
        if (w.size() != cfg.members.size()) {
            throw MemberCountMismatch(cfg.members.size(), w.size());
        }
        for (std::size_t i = 0; i < w.size(); ++i) cfg.members[i].weight = w[i];
    } else if (!a.dev_in.empty()) {
        if (!a.dev_gold) {
            throw InvalidArgument("--dev-in needs --dev-gold");
        }
        const auto gold = load(ctx, *a.dev_gold, task, Split::eval);
        std::vector<double> f1(cfg.members.size(), 0.0);
        std::vector<bool> seen(cfg.members.size(), false);
        for (const auto &p : a.dev_in) {
            ctx.input(p);
            const PredictionSet dev = read_predictions(p);
            const auto it = std::find_if(cfg.members.begin(), cfg.members.end(), [&](const EnsembleMember &m) { return m.model_key == dev.model_key; });
            if (it == cfg.members.end()) {
                throw MemberCountMismatch("dev predictions for '" + dev.model_key + "' match no ensemble member");
            }
            const auto idx = static_cast<std::size_t>(it - cfg.members.begin());
            f1[idx] = score(gold, dev, task).macro_f1;
            seen[idx] = true;
        }
        if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw MemberCountMismatch("--dev-in must cover every ensemble member");
        }
        const auto w = weights_from_dev_f1(f1);
        for (std::size_t i = 0; i < w.size(); ++i) cfg.members[i].weight = w[i];
    }
    cfg.validate();

    PredictionSet combined = ensemble_predictions(sets, cfg, task);
    combined.metadata["seed"] = std::to_string(ctx.seed);
    const fs::path out = a.out.value_or((cfg.name.empty() ? std::string("ensemble") : cfg.name) + ".jsonl");
    ensure_parent(out);
    write_predictions(out, combined, task);
    ctx.artifact(out);
    ctx.artifact(metadata_path(out));
    ctx.out << fmt::format("wrote {} predictions from {} to {}\n", combined.rows.size(), combined.model_key, out.string());
}

// ---- evaluate / report --------------------------------------------------------

struct EvaluateArgs {
    std::string task;
    std::string gold;
    std::string pred;
    std::optional<std::string> split, out, figure;
};

void run_evaluate(Context &ctx, const EvaluateArgs &a) {
    const TaskSpec &task = task_of(a.task);
    ctx.manifest.task = a.task;
    ctx.input(a.pred);
    const PredictionSet pred = read_predictions(a.pred);
    const Split split = a.split ? parse_split(*a.split) : pred.split;
    const auto gold = load(ctx, a.gold, task, split);
    const MetricsReport report = score(gold, pred, task);

    ctx.out << "macro_f1=" << format_four_decimals(report.macro_f1) << "\n";
    ctx.out << fmt::format("weighted_f1={} accuracy={}\n", format_four_decimals(report.weighted_f1), format_four_decimals(report.accuracy));
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        const auto &m = report.per_class[i];
        ctx.out << fmt::format("{}\tprecision={}\trecall={}\tf1={}\tsupport={}\n", report.labels[i], format_four_decimals(m.precision),
                               format_four_decimals(m.recall), format_four_decimals(m.f1), m.support);
    }
    if (a.out) {
        write_text(*a.out, report.to_json().dump(2) + "\n");
        ctx.artifact(*a.out);
    }
    if (a.figure) {
        ensure_parent(*a.figure);
        confusion_figure(report, task, *a.figure);
        ctx.artifact(*a.figure);
    }
}

struct ReportArgs {
    std::vector<std::string> in;
    std::string format = "plain";
    std::optional<std::string> out;
};

void run_report(Context &ctx, const ReportArgs &a) {
    std::vector<TableRow> rows;
    for (const auto &p : a.in) {
        ctx.input(p);
        std::ifstream f(p, std::ios::binary);
        MetricsReport m;
        try {
            m = MetricsReport::from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::exception &e) {
            throw MalformedRow(1, p + ": " + e.what());
        }
        auto it = std::find_if(rows.begin(), rows.end(), [&](const TableRow &r) { return r.model_key == m.model_key && r.augmented == m.augmented; });
        if (it == rows.end()) {
            rows.push_back({m.model_key, m.augmented, std::nullopt, std::nullopt});
            it = rows.end() - 1;
        }
        if (m.split == Split::test) {
            it->test = std::move(m);
        } else {
            it->eval = std::move(m);
        }
    }
    TableFormat fmt_kind = TableFormat::plain;
    if (a.format == "markdown" || a.format == "md") fmt_kind = TableFormat::markdown;
    else if (a.format == "tsv") fmt_kind = TableFormat::tsv;
    else if (a.format == "csv") fmt_kind = TableFormat::csv;
    else if (a.format != "plain") throw InvalidArgument("unknown table format '" + a.format + "'");
    const std::string table = report_table(rows, fmt_kind);
    ctx.out << table;
    if (a.out) {
        write_text(*a.out, table);
        ctx.artifact(*a.out);
    }
}

std::string_view category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::usage: return "usage";
        case ErrorCategory::data: return "data";
        case ErrorCategory::backend: return "backend";
    }
    return "data";
}

int emit_error(std::ostream &err, std::string_view kind, ErrorCategory category, std::string_view message) {
    const int code = category == ErrorCategory::usage ? exit_usage : category == ErrorCategory::data ? exit_data : exit_backend;
    nlohmann::ordered_json j{{"error", kind}, {"category", category_name(category)}, {"exit", code}, {"message", message}};
    err << j.dump() << '\n';
    return code;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"stancekit: hate speech, target and stance classification pipeline"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "flat key = value config file");
    app.add_option("--seed", g.seed, "seed for every random choice (config seed; default 42)");
    app.add_option("--manifest", g.manifest, "run manifest to append to (config manifest.path; default runs/manifest.jsonl)");
    app.add_flag("-v,--verbose", g.verbose, "log progress to stderr");

    StatsArgs stats;
    auto *s_stats = app.add_subcommand("stats", "label distribution per split");
    s_stats->add_option("--task", stats.task, "A, B or C")->required();
    s_stats->add_option("--train", stats.train);
    s_stats->add_option("--eval", stats.eval);
    s_stats->add_option("--test", stats.test);
    s_stats->add_flag("--counts", stats.counts, "add count columns and a total row");
    s_stats->add_option("--delimiter", stats.delimiter)->check(CLI::IsMember({"tab", "comma"}));
    s_stats->add_option("--out", stats.out, "also write the table here");

    AugmentArgs aug;
    auto *s_aug = app.add_subcommand("augment", "back-translate minority-label train examples");
    s_aug->add_option("--task", aug.task)->required();
    s_aug->add_option("--train", aug.train)->required();
    s_aug->add_option("--out", aug.out)->required();
    s_aug->add_option("--translator", aug.translator, "mock, identity, reverse or http (config mt.backend; default mock)");
    s_aug->add_option("--endpoint", aug.endpoint, "translation service URL (env STANCEKIT_MT_ENDPOINT, config mt.endpoint)");
    s_aug->add_option("--max-copies", aug.max_copies, "cap copies per example (config augment.max_copies; default unlimited)");
    s_aug->add_option("--max-in-flight", aug.max_in_flight, "concurrent examples (config mt.max_in_flight; default 1)");
    s_aug->add_option("--summary", aug.summary, "JSON summary of produced and skipped copies");

    TrainArgs tr;
    auto *s_train = app.add_subcommand("train", "fine-tune a registry model");
    s_train->add_option("--task", tr.task)->required();
    s_train->add_option("--model", tr.model, "registry key, e.g. xlm-r")->required();
    s_train->add_option("--train", tr.train)->required();
    s_train->add_option("--dev", tr.dev)->required();
    s_train->add_option("--encoder", tr.encoder, "override the registry encoder (config model.<key>.encoder)");
    s_train->add_option("--epochs", tr.epochs, "config train.epochs; default 5");
    s_train->add_option("--batch", tr.batch, "config train.train_batch; default 8");
    s_train->add_option("--lr", tr.lr, "config train.learning_rate; default 1e-5");
    s_train->add_option("--runs-dir", tr.runs_dir, "config runs.dir; default runs");
    s_train->add_option("--run-id", tr.run_id, "checkpoint directory name; default a UTC timestamp");

    PredictArgs pr;
    auto *s_pred = app.add_subcommand("predict", "predict with a saved checkpoint");
    s_pred->add_option("--task", pr.task)->required();
    s_pred->add_option("--checkpoint", pr.checkpoint, "checkpoint directory or model.bin")->required();
    s_pred->add_option("--input", pr.input)->required();
    s_pred->add_option("--split", pr.split);
    s_pred->add_option("--out", pr.out)->required();

    PromptArgs pa;
    auto *s_prompt = app.add_subcommand("prompt", "zero- or few-shot LLM classification");
    s_prompt->add_option("--task", pa.task)->required();
    s_prompt->add_option("--input", pa.input)->required();
    s_prompt->add_option("--split", pa.split);
    s_prompt->add_option("--out", pa.out)->required();
    s_prompt->add_option("--shots", pa.shots, "exemplars per label; 0 = zero-shot");
    s_prompt->add_option("--pool", pa.pool, "train file to draw exemplars from");
    s_prompt->add_option("--log", pa.log, "JSON-lines prompt/response audit log");
    s_prompt->add_option("--llm", pa.llm, "mock or http (config llm.backend; default mock)");
    s_prompt->add_option("--endpoint", pa.endpoint, "env STANCEKIT_LLM_ENDPOINT, config llm.endpoint");
    s_prompt->add_option("--model", pa.model, "env STANCEKIT_LLM_MODEL, config llm.model");
    s_prompt->add_option("--max-in-flight", pa.max_in_flight, "config llm.max_in_flight; default 1");

    EnsembleArgs en;
    auto *s_ens = app.add_subcommand("ensemble", "combine prediction sets by voting");
    s_ens->add_option("--preset", en.preset, "ensemble1, ensemble2 or a config-defined preset");
    s_ens->add_option("--members", en.members, "comma-separated model keys, instead of --preset");
    s_ens->add_option("--in", en.in, "member prediction files")->required();
    s_ens->add_option("--out", en.out, "default <preset>.jsonl, or ensemble.jsonl");
    s_ens->add_option("--mode", en.mode)->check(CLI::IsMember({"majority", "weighted"}));
    s_ens->add_option("--tie-break", en.tie_break)->check(CLI::IsMember({"highest_weight_member", "majority_label"}));
    s_ens->add_option("--weights", en.weights, "comma-separated member weights");
    s_ens->add_option("--dev-gold", en.dev_gold, "dev gold file for F1-derived weights");
    s_ens->add_option("--dev-in", en.dev_in, "member dev prediction files");
    s_ens->add_option("--task", en.task);

    EvaluateArgs ev;
    auto *s_eval = app.add_subcommand("evaluate", "score predictions against gold labels");
    s_eval->add_option("--task", ev.task)->required();
    s_eval->add_option("--gold", ev.gold)->required();
    s_eval->add_option("--pred", ev.pred)->required();
    s_eval->add_option("--split", ev.split);
    s_eval->add_option("--out", ev.out, "metrics JSON");
    s_eval->add_option("--figure", ev.figure, "confusion matrix PNG");

    ReportArgs rp;
    auto *s_report = app.add_subcommand("report", "Eval/Test F1 table from metrics files");
    s_report->add_option("--in", rp.in, "metrics JSON files from evaluate --out")->required();
    s_report->add_option("--format", rp.format)->check(CLI::IsMember({"plain", "markdown", "md", "tsv", "csv"}));
    s_report->add_option("--out", rp.out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError &e) {
        return emit_error(err, "UsageError", ErrorCategory::usage, e.what());
    }

    spdlog::set_level(g.verbose ? spdlog::level::info : spdlog::level::warn);

    try {
        Config cfg;
        if (g.config_path) {
            cfg = Config::load(*g.config_path);
        }
        std::uint64_t seed = 42;
        if (g.seed) {
            seed = *g.seed;
        } else if (const auto c = cfg.get_int("seed")) {
            if (*c < 0) {
                throw InvalidArgument("seed must be non-negative");
            }
            seed = static_cast<std::uint64_t>(*c);
        }
        // the effective seed is part of the hashed configuration
        cfg.set("seed", std::to_string(seed));
        Settings settings(cfg);
        fs::path manifest_path = settings.str(g.manifest, nullptr, "manifest.path", "runs/manifest.jsonl");

        Context ctx{std::move(settings), seed, std::move(manifest_path), {}, out};
        ctx.manifest.run_id = make_run_id();
        ctx.manifest.seed = seed;
        ctx.manifest.config_hash = config_hash(cfg);
        if (g.config_path) {
            ctx.input(*g.config_path);
        }

        CLI::App *sub = app.get_subcommands().front();
        ctx.manifest.subcommand = sub->get_name();
        if (sub == s_stats) run_stats(ctx, stats);
        else if (sub == s_aug) run_augment(ctx, aug);
        else if (sub == s_train) run_train(ctx, tr);
        else if (sub == s_pred) run_predict(ctx, pr);
        else if (sub == s_prompt) run_prompt(ctx, pa);
        else if (sub == s_ens) run_ensemble(ctx, en);
        else if (sub == s_eval) run_evaluate(ctx, ev);
        else if (sub == s_report) run_report(ctx, rp);
        ctx.manifest.append_to(ctx.manifest_path);
        return exit_ok;
    } catch (const Error &e) {
        return emit_error(err, e.kind(), e.category(), e.what());
    } catch (const nlohmann::json::exception &e) {
        return emit_error(err, "DataError", ErrorCategory::data, e.what());
    } catch (const std::filesystem::filesystem_error &e) {
        return emit_error(err, "DataError", ErrorCategory::data, e.what());
    } catch (const std::exception &e) {
        return emit_error(err, "BackendError", ErrorCategory::backend, e.what());
    }
}

}  // namespace stancekit
