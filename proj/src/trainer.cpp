#include "stancekit/trainer.hpp"

#include "stancekit/error.hpp"
#include "stancekit/evaluation.hpp"
#include "stancekit/random.hpp"
#include "stancekit/text.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <new>

namespace stancekit {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("learning_rate must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw InvalidArgument("dropout must lie in [0, 1)");
    }
    if (train_batch == 0 || eval_batch == 0) {
        throw InvalidArgument("batch sizes must be positive");
    }
    if (max_seq_len == 0) {
        throw InvalidArgument("max_seq_len must be positive");
    }
    if (weight_decay < 0.0 || clip_norm <= 0.0) {
        throw InvalidArgument("weight_decay must be >= 0 and clip_norm > 0");
    }
}

TrainConfig TrainConfig::from_config(const Config &cfg) {
    TrainConfig c;
    auto size_key = [&](std::string_view key, std::size_t &field) {
        if (const auto v = cfg.get_int(key)) {
            if (*v < 0) {
                throw InvalidArgument(std::string(key) + " must be non-negative");
            }
            field = static_cast<std::size_t>(*v);
        }
    };
    c.learning_rate = cfg.get_double("train.learning_rate").value_or(c.learning_rate);
    size_key("train.train_batch", c.train_batch);
    size_key("train.eval_batch", c.eval_batch);
    size_key("train.epochs", c.epochs);
    c.dropout = cfg.get_double("train.dropout").value_or(c.dropout);
    size_key("train.max_seq_len", c.max_seq_len);
    if (const auto seed = cfg.get_int("seed")) {
        c.seed = static_cast<std::uint64_t>(*seed);
    }
    c.weight_decay = cfg.get_double("train.weight_decay").value_or(c.weight_decay);
    c.clip_norm = cfg.get_double("train.clip_norm").value_or(c.clip_norm);
    c.validate();
    return c;
}

std::string TrainConfig::hash() const {
    const std::string canonical = fmt::format("lr={};tb={};eb={};ep={};do={};len={};seed={};wd={};b1={};b2={};eps={};clip={}", learning_rate,
                                              train_batch, eval_batch, epochs, dropout, max_seq_len, seed, weight_decay, beta1, beta2,
                                              adam_epsilon, clip_norm);
    return fmt::format("{:016x}", text::fnv1a64(canonical));
}

ModelRegistry ModelRegistry::defaults() {
    ModelRegistry r;
    r.set("bertweet-large", "vinai/bertweet-large");
    r.set("bertweet-base", "vinai/bertweet-base");
    r.set("xlm-r", "xlm-roberta-large");
    r.set("hate-bert", "GroNLP/hateBERT");
    r.set("fbert", "diptanu/fBERT");
    r.set("bert-base", "bert-base-uncased");
    return r;
}

ModelRegistry ModelRegistry::from_config(const Config &cfg) {
    ModelRegistry r = defaults();
    for (const auto &[rest, value] : cfg.with_prefix("model.")) {
        constexpr std::string_view suffix = ".encoder";
        if (rest.size() > suffix.size() && rest.compare(rest.size() - suffix.size(), suffix.size(), suffix) == 0) {
            r.set(rest.substr(0, rest.size() - suffix.size()), value);
        }
    }
    return r;
}

void ModelRegistry::set(std::string key, std::string encoder_ref) {
    for (auto &[k, v] : entries_) {
        if (k == key) {
            v = std::move(encoder_ref);
            return;
        }
    }
    entries_.emplace_back(std::move(key), std::move(encoder_ref));
}

std::vector<std::string> ModelRegistry::keys() const {
    std::vector<std::string> out;
    for (const auto &[k, v] : entries_) {
        out.push_back(k);
    }
    return out;
}

ModelEntry ModelRegistry::entry(std::string_view key, const TaskSpec &task) const {
    for (const auto &[k, v] : entries_) {
        if (k == key) {
            return ModelEntry{k, v, task.size()};
        }
    }
    throw InvalidArgument("unknown model registry key '" + std::string(key) + "'");
}

TinyEncoderSpec TinyEncoderSpec::parse(std::string_view encoder_ref) {
    constexpr std::string_view scheme = "tiny";
    if (encoder_ref.substr(0, scheme.size()) != scheme || (encoder_ref.size() > scheme.size() && encoder_ref[scheme.size()] != ':')) {
        throw UnsupportedEncoder(std::string(encoder_ref));
    }
    TinyEncoderSpec spec;
    if (encoder_ref.size() <= scheme.size() + 1) {
        return spec;
    }
    for (const auto &kv : text::split(encoder_ref.substr(scheme.size() + 1), ',')) {
        const auto parts = text::split(kv, '=');
        if (parts.size() != 2) {
            throw InvalidArgument("bad tiny encoder option '" + kv + "'");
        }
        std::size_t value = 0;
        try {
            value = std::stoul(parts[1]);
        } catch (const std::exception &) {
            throw InvalidArgument("bad tiny encoder option '" + kv + "'");
        }
        if (value == 0) {
            throw InvalidArgument("tiny encoder option '" + kv + "' must be positive");
        }
        const std::string key(text::trim(parts[0]));
        if (key == "buckets") {
            spec.buckets = value;
        } else if (key == "dim") {
            spec.dim = value;
        } else if (key == "hidden") {
            spec.hidden = value;
        } else {
            throw InvalidArgument("unknown tiny encoder option '" + key + "'");
        }
    }
    return spec;
}

std::vector<std::string> tokenize(std::string_view input, std::size_t max_len) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && tokens.size() < max_len) {
            tokens.push_back(std::move(current));
        }
        current.clear();
    };
    for (const char c : input) {
        const auto u = static_cast<unsigned char>(c);
        const bool word = (u >= 0x80) || std::isalnum(u) != 0 || c == '#' || c == '@' || c == '\'' || c == '-';
        if (word) {
            current.push_back(static_cast<char>(std::tolower(u)));
        } else {
            flush();
        }
        if (tokens.size() >= max_len) {
            break;
        }
    }
    flush();
    return tokens;
}

TextClassifier::TextClassifier(ModelEntry entry, const TaskSpec &task, TinyEncoderSpec spec, std::uint64_t seed)
    : entry_(std::move(entry)), task_(task.id()), labels_(task.labels()), spec_(spec) {
    if (entry_.head_dim != task.size()) {
        throw LabelCardinalityMismatch(entry_.head_dim, task.size());
    }
    Rng rng(seed);
    embed_.resize(spec_.buckets * spec_.dim);
    for (double &v : embed_) {
        v = rng.normal();
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(spec_.dim + spec_.hidden));
    w1_.resize(spec_.hidden * spec_.dim);
    for (double &v : w1_) {
        v = rng.uniform(-limit, limit);
    }
    b1_.assign(spec_.hidden, 0.0);
    w2_.assign(labels_.size() * spec_.hidden, 0.0);
    b2_.assign(labels_.size(), 0.0);
}

std::size_t TextClassifier::parameter_count() const noexcept {
    return embed_.size() + w1_.size() + b1_.size() + w2_.size() + b2_.size();
}

namespace {

std::vector<std::size_t> bucket_ids(std::string_view input, std::size_t max_len, std::size_t buckets) {
    std::vector<std::size_t> ids;
    for (const auto &tok : tokenize(input, max_len)) {
        ids.push_back(static_cast<std::size_t>(text::fnv1a64(tok) % buckets));
    }
    return ids;
}

void softmax(std::vector<double> &z) {
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double &v : z) {
        v = std::exp(v - top);
        sum += v;
    }
    for (double &v : z) {
        v /= sum;
    }
}

}  // namespace

/// Forward/backward passes and the optimiser; friend of TextClassifier.
class Trainer {
public:
    Trainer(TextClassifier &model, const TrainConfig &cfg) : m_(model), cfg_(cfg) {
        for (auto *p : params()) {
            grads_.emplace_back(p->size(), 0.0);
            first_.emplace_back(p->size(), 0.0);
            second_.emplace_back(p->size(), 0.0);
        }
    }

    struct Activations {
        std::vector<double> pooled;
        std::vector<double> hidden;   // after tanh
        std::vector<double> dropped;  // after dropout
        std::vector<double> probs;
    };

    static void forward(const TextClassifier &m, std::span<const std::size_t> ids, Activations &a, const std::vector<double> *mask) {
        const std::size_t dim = m.spec_.dim;
        const std::size_t hid = m.spec_.hidden;
        const std::size_t k = m.labels_.size();
        a.pooled.assign(dim, 0.0);
        for (const std::size_t id : ids) {
            const double *row = &m.embed_[id * dim];
            for (std::size_t d = 0; d < dim; ++d) {
                a.pooled[d] += row[d];
            }
        }
        if (!ids.empty()) {
            for (double &v : a.pooled) {
                v /= static_cast<double>(ids.size());
            }
        }
        a.hidden.assign(hid, 0.0);
        for (std::size_t h = 0; h < hid; ++h) {
            double s = m.b1_[h];
            const double *w = &m.w1_[h * dim];
            for (std::size_t d = 0; d < dim; ++d) {
                s += w[d] * a.pooled[d];
            }
            a.hidden[h] = std::tanh(s);
        }
        a.dropped = a.hidden;
        if (mask != nullptr) {
            for (std::size_t h = 0; h < hid; ++h) {
                a.dropped[h] *= (*mask)[h];
            }
        }
        a.probs.assign(k, 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            double s = m.b2_[c];
            const double *w = &m.w2_[c * hid];
            for (std::size_t h = 0; h < hid; ++h) {
                s += w[h] * a.dropped[h];
            }
            a.probs[c] = s;
        }
        softmax(a.probs);
    }

    /// Adds d(loss * scale)/d(params) for one example; returns its loss.
    double accumulate(std::span<const std::size_t> ids, std::size_t gold, const std::vector<double> &mask, double scale) {
        Activations a;
        forward(m_, ids, a, &mask);
        const std::size_t dim = m_.spec_.dim;
        const std::size_t hid = m_.spec_.hidden;
        const std::size_t k = m_.labels_.size();
        auto &g_embed = grads_[0];
        auto &g_w1 = grads_[1];
        auto &g_b1 = grads_[2];
        auto &g_w2 = grads_[3];
        auto &g_b2 = grads_[4];

        std::vector<double> dlogits(a.probs);
        dlogits[gold] -= 1.0;
        std::vector<double> ddropped(hid, 0.0);
        for (std::size_t c = 0; c < k; ++c) {
            const double dz = dlogits[c] * scale;
            g_b2[c] += dz;
            for (std::size_t h = 0; h < hid; ++h) {
                g_w2[c * hid + h] += dz * a.dropped[h];
                ddropped[h] += dz * m_.w2_[c * hid + h];
            }
        }
        std::vector<double> dpooled(dim, 0.0);
        for (std::size_t h = 0; h < hid; ++h) {
            const double da = ddropped[h] * mask[h] * (1.0 - a.hidden[h] * a.hidden[h]);
            g_b1[h] += da;
            for (std::size_t d = 0; d < dim; ++d) {
                g_w1[h * dim + d] += da * a.pooled[d];
                dpooled[d] += da * m_.w1_[h * dim + d];
            }
        }
        if (!ids.empty()) {
            const double share = 1.0 / static_cast<double>(ids.size());
            for (const std::size_t id : ids) {
                for (std::size_t d = 0; d < dim; ++d) {
                    g_embed[id * dim + d] += dpooled[d] * share;
                }
            }
        }
        return -std::log(std::max(a.probs[gold], 1e-300));
    }

    void step() {
        double norm_sq = 0.0;
        for (const auto &g : grads_) {
            for (const double v : g) {
                norm_sq += v * v;
            }
        }
        const double norm = std::sqrt(norm_sq);
        const double clip = norm > cfg_.clip_norm ? cfg_.clip_norm / (norm + 1e-6) : 1.0;

        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        const double lr = cfg_.learning_rate;
        auto ps = params();
        for (std::size_t p = 0; p < ps.size(); ++p) {
            auto &w = *ps[p];
            auto &g = grads_[p];
            auto &m1 = first_[p];
            auto &m2 = second_[p];
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double gi = g[i] * clip;
                w[i] *= 1.0 - lr * cfg_.weight_decay;
                m1[i] = cfg_.beta1 * m1[i] + (1.0 - cfg_.beta1) * gi;
                m2[i] = cfg_.beta2 * m2[i] + (1.0 - cfg_.beta2) * gi * gi;
                w[i] -= lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + cfg_.adam_epsilon);
            }
            std::fill(g.begin(), g.end(), 0.0);
        }
    }

private:
    std::vector<std::vector<double> *> params() { return {&m_.embed_, &m_.w1_, &m_.b1_, &m_.w2_, &m_.b2_}; }

    TextClassifier &m_;
    const TrainConfig &cfg_;
    std::vector<std::vector<double>> grads_;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
    std::uint64_t t_ = 0;
};

std::vector<double> TextClassifier::probabilities(std::string_view input, std::size_t max_seq_len) const {
    const auto ids = bucket_ids(input, max_seq_len, spec_.buckets);
    Trainer::Activations a;
    Trainer::forward(*this, ids, a, nullptr);
    return a.probs;
}

namespace {

std::vector<std::size_t> gold_indices(std::span<const LabeledExample> examples, const TaskSpec &task) {
    std::vector<std::size_t> out;
    out.reserve(examples.size());
    for (const auto &ex : examples) {
        if (!ex.labeled()) {
            throw UnlabeledGold(ex.id);
        }
        const auto idx = task.index_of(*ex.label);
        if (!idx) {
            throw UnknownLabel(*ex.label, 0);
        }
        out.push_back(*idx);
    }
    return out;
}

std::size_t argmax(const std::vector<double> &v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

FineTuneResult fine_tune(std::span<const LabeledExample> train, std::span<const LabeledExample> dev, const TaskSpec &task, const ModelEntry &entry,
                         const TrainConfig &cfg) {
    cfg.validate();
    if (entry.head_dim != task.size()) {
        throw LabelCardinalityMismatch(entry.head_dim, task.size());
    }
    if (train.empty() || dev.empty()) {
        throw EmptyDataset("fine-tuning needs non-empty train and dev sets");
    }
    const TinyEncoderSpec spec = TinyEncoderSpec::parse(entry.encoder_ref);
    const std::vector<std::size_t> train_gold = gold_indices(train, task);
    const std::vector<std::size_t> dev_gold = gold_indices(dev, task);

    try {
        FineTuneResult result{TextClassifier(entry, task, spec, cfg.seed), {}, std::nullopt, std::nullopt};
        if (cfg.epochs == 0) {
            return result;
        }
        TextClassifier working = result.model;
        Trainer trainer(working, cfg);

        std::vector<std::vector<std::size_t>> train_ids;
        train_ids.reserve(train.size());
        for (const auto &ex : train) {
            train_ids.push_back(bucket_ids(ex.text, cfg.max_seq_len, spec.buckets));
        }
        Rng shuffle_rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
        Rng dropout_rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
        std::vector<std::size_t> order(train.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::vector<double> mask(spec.hidden, 1.0);
        const double keep_scale = 1.0 / (1.0 - cfg.dropout);

        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < order.size(); start += cfg.train_batch) {
                const std::size_t end = std::min(order.size(), start + cfg.train_batch);
                const double scale = 1.0 / static_cast<double>(end - start);
                for (std::size_t b = start; b < end; ++b) {
                    for (double &v : mask) {
                        v = dropout_rng.uniform() < cfg.dropout ? 0.0 : keep_scale;
                    }
                    loss_sum += trainer.accumulate(train_ids[order[b]], train_gold[order[b]], mask, scale);
                }
                trainer.step();
            }

            std::vector<std::size_t> dev_pred;
            dev_pred.reserve(dev.size());
            for (const auto &ex : dev) {
                dev_pred.push_back(argmax(working.probabilities(ex.text, cfg.max_seq_len)));
            }
            const double f1 = score_indices(dev_gold, dev_pred, task).macro_f1;
            result.trace.push_back({epoch, loss_sum / static_cast<double>(train.size()), f1});
            spdlog::debug("{} epoch {}: loss {:.6f} dev macro F1 {:.4f}", entry.registry_key, epoch, result.trace.back().train_loss, f1);
            if (!result.best_dev_f1 || f1 > *result.best_dev_f1) {
                result.best_dev_f1 = f1;
                result.best_epoch = epoch;
                result.model = working;
            }
        }
        return result;
    } catch (const std::bad_alloc &) {
        throw OutOfMemory(cfg.train_batch);
    }
}

PredictionSet predict(const TextClassifier &model, std::span<const LabeledExample> examples, const TaskSpec &task, const TrainConfig &cfg,
                      std::optional<Split> split) {
    if (model.task() != task.id() || model.labels() != task.labels()) {
        throw TaskMismatch("model '" + model.entry().registry_key + "' was trained for task " + std::string(to_string(model.task())) + ", not " +
                           std::string(to_string(task.id())));
    }
    PredictionSet set;
    set.model_key = model.entry().registry_key;
    set.task = task.id();
    set.split = split.value_or(examples.empty() ? Split::eval : examples.front().split);
    set.metadata["encoder"] = model.entry().encoder_ref;
    set.metadata["config_hash"] = cfg.hash();
    set.metadata["seed"] = std::to_string(cfg.seed);
    set.rows.reserve(examples.size());
    // eval_batch only groups work; results do not depend on it
    for (const auto &ex : examples) {
        std::vector<double> probs = model.probabilities(ex.text, cfg.max_seq_len);
        const std::size_t best = argmax(probs);
        set.rows.push_back({ex.id, task.labels()[best], std::move(probs)});
    }
    return set;
}

namespace {
constexpr char magic[8] = {'S', 'T', 'K', 'M', 'O', 'D', '1', '\n'};

void write_block(std::ofstream &out, const std::vector<double> &v) {
    out.write(reinterpret_cast<const char *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_block(std::ifstream &in, std::vector<double> &v, std::size_t n, const std::filesystem::path &file) {
    v.resize(n);
    in.read(reinterpret_cast<char *>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) {
        throw MalformedRow(0, "truncated model file " + file.string());
    }
}
}  // namespace

void TextClassifier::save(const std::filesystem::path &file) const {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw UnwritablePath(file.string());
    }
    nlohmann::ordered_json header;
    header["registry_key"] = entry_.registry_key;
    header["encoder_ref"] = entry_.encoder_ref;
    header["task"] = to_string(task_);
    header["labels"] = labels_;
    header["buckets"] = spec_.buckets;
    header["dim"] = spec_.dim;
    header["hidden"] = spec_.hidden;
    const std::string h = header.dump();
    const std::uint64_t len = h.size();
    out.write(magic, sizeof magic);
    out.write(reinterpret_cast<const char *>(&len), sizeof len);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    write_block(out, embed_);
    write_block(out, w1_);
    write_block(out, b1_);
    write_block(out, w2_);
    write_block(out, b2_);
    if (!out) {
        throw UnwritablePath(file.string());
    }
}

TextClassifier TextClassifier::load(const std::filesystem::path &file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw MissingFile(file.string());
    }
    char head[sizeof magic] = {};
    std::uint64_t len = 0;
    in.read(head, sizeof head);
    in.read(reinterpret_cast<char *>(&len), sizeof len);
    if (!in || !std::equal(std::begin(head), std::end(head), std::begin(magic)) || len > (1U << 20U)) {
        throw MalformedRow(0, file.string() + " is not a model file");
    }
    std::string h(len, '\0');
    in.read(h.data(), static_cast<std::streamsize>(len));
    TextClassifier m;
    try {
        const auto header = nlohmann::json::parse(h);
        m.entry_.registry_key = header.at("registry_key").get<std::string>();
        m.entry_.encoder_ref = header.at("encoder_ref").get<std::string>();
        m.task_ = parse_task_id(header.at("task").get<std::string>());
        m.labels_ = header.at("labels").get<std::vector<std::string>>();
        m.entry_.head_dim = m.labels_.size();
        m.spec_.buckets = header.at("buckets").get<std::size_t>();
        m.spec_.dim = header.at("dim").get<std::size_t>();
        m.spec_.hidden = header.at("hidden").get<std::size_t>();
    } catch (const nlohmann::json::exception &e) {
        throw MalformedRow(0, file.string() + ": " + e.what());
    }
    read_block(in, m.embed_, m.spec_.buckets * m.spec_.dim, file);
    read_block(in, m.w1_, m.spec_.hidden * m.spec_.dim, file);
    read_block(in, m.b1_, m.spec_.hidden, file);
    read_block(in, m.w2_, m.labels_.size() * m.spec_.hidden, file);
    read_block(in, m.b2_, m.labels_.size(), file);
    return m;
}

void save_checkpoint(const std::filesystem::path &dir, const FineTuneResult &result, const TrainConfig &cfg) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw UnwritablePath(dir.string());
    }
    result.model.save(dir / "model.bin");

    nlohmann::ordered_json trace;
    trace["model_key"] = result.model.entry().registry_key;
    trace["encoder"] = result.model.entry().encoder_ref;
    trace["task"] = to_string(result.model.task());
    trace["checkpoint_policy"] = "best_dev_macro_f1";
    trace["config_hash"] = cfg.hash();
    trace["config"] = {{"learning_rate", cfg.learning_rate}, {"train_batch", cfg.train_batch}, {"eval_batch", cfg.eval_batch},
                       {"epochs", cfg.epochs},               {"dropout", cfg.dropout},         {"max_seq_len", cfg.max_seq_len},
                       {"seed", cfg.seed},                   {"weight_decay", cfg.weight_decay}, {"clip_norm", cfg.clip_norm}};
    nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
    for (const auto &e : result.trace) {
        epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"dev_macro_f1", e.dev_macro_f1}});
    }
    trace["epochs"] = std::move(epochs);
    trace["best_epoch"] = result.best_epoch ? nlohmann::ordered_json(*result.best_epoch) : nlohmann::ordered_json(nullptr);
    trace["best_dev_f1"] = result.best_dev_f1 ? nlohmann::ordered_json(*result.best_dev_f1) : nlohmann::ordered_json(nullptr);
    std::ofstream out(dir / "trace.json", std::ios::binary | std::ios::trunc);
    if (!out) {
        throw UnwritablePath((dir / "trace.json").string());
    }
    out << trace.dump(2) << '\n';
}

}  // namespace stancekit
