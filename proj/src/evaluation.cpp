#include "stancekit/evaluation.hpp"

#include "stancekit/csv.hpp"
#include "stancekit/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace stancekit {

ExampleUniverseMismatch::ExampleUniverseMismatch(std::vector<std::string> ids)
    : Error(ErrorCategory::data, "ExampleUniverseMismatch", [&] {
          std::string msg = "example id sets differ (" + std::to_string(ids.size()) + " ids):";
          for (std::size_t i = 0; i < ids.size() && i < 20; ++i) {
              msg += " " + ids[i];
          }
          if (ids.size() > 20) {
              msg += " ...";
          }
          return msg;
      }()),
      ids_(std::move(ids)) {}

MetricsReport score_indices(std::span<const std::size_t> gold, std::span<const std::size_t> pred, const TaskSpec &task) {
    if (gold.size() != pred.size()) {
        throw InvalidArgument("gold and prediction lengths differ");
    }
    const std::size_t k = task.size();
    MetricsReport r;
    r.labels = task.labels();
    r.confusion.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] >= k || pred[i] >= k) {
            throw InvalidArgument("label index out of range");
        }
        ++r.confusion[gold[i]][pred[i]];
    }
    r.total = gold.size();

    std::size_t correct = 0;
    double f1_sum = 0.0;
    double weighted = 0.0;
    r.per_class.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = r.confusion[c][c];
        std::size_t gold_count = 0;
        std::size_t pred_count = 0;
        for (std::size_t j = 0; j < k; ++j) {
            gold_count += r.confusion[c][j];
            pred_count += r.confusion[j][c];
        }
        ClassMetrics &m = r.per_class[c];
        m.support = gold_count;
        m.precision = pred_count == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred_count);
        m.recall = gold_count == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold_count);
        m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        correct += tp;
        f1_sum += m.f1;
        weighted += m.f1 * static_cast<double>(gold_count);
    }
    r.macro_f1 = f1_sum / static_cast<double>(k);
    r.weighted_f1 = r.total == 0 ? 0.0 : weighted / static_cast<double>(r.total);
    r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(r.total);
    return r;
}

MetricsReport score(std::span<const LabeledExample> gold, const PredictionSet &pred, const TaskSpec &task) {
    if (pred.task != task.id()) {
        throw TaskMismatch("predictions are for task " + std::string(to_string(pred.task)));
    }
    std::unordered_map<std::string_view, std::size_t> predicted;
    predicted.reserve(pred.rows.size());
    for (const auto &row : pred.rows) {
        const auto idx = task.index_of(row.label);
        if (!idx) {
            throw InvalidArgument("predicted label '" + row.label + "' is not in the label set");
        }
        if (!predicted.emplace(row.id, *idx).second) {
            throw InvalidArgument("duplicate prediction id '" + row.id + "'");
        }
    }

    std::vector<std::size_t> g;
    std::vector<std::size_t> p;
    g.reserve(gold.size());
    p.reserve(gold.size());
    std::set<std::string> missing;
    std::unordered_map<std::string_view, bool> gold_ids;
    for (const auto &ex : gold) {
        if (!ex.labeled()) {
            throw UnlabeledGold(ex.id);
        }
        gold_ids.emplace(ex.id, true);
        const auto it = predicted.find(ex.id);
        if (it == predicted.end()) {
            missing.insert(ex.id);
            continue;
        }
        const auto gi = task.index_of(*ex.label);
        if (!gi) {
            throw UnknownLabel(*ex.label, 0);
        }
        g.push_back(*gi);
        p.push_back(it->second);
    }
    for (const auto &row : pred.rows) {
        if (gold_ids.find(row.id) == gold_ids.end()) {
            missing.insert(row.id);
        }
    }
    if (!missing.empty()) {
        throw ExampleUniverseMismatch(std::vector<std::string>(missing.begin(), missing.end()));
    }
    MetricsReport r = score_indices(g, p, task);
    r.model_key = pred.model_key;
    r.split = pred.split;
    if (const auto it = pred.metadata.find("augmented"); it != pred.metadata.end()) {
        r.augmented = it->second == "true";
    }
    return r;
}

namespace {
std::string round_half_up(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    // decimal ties such as 0.885 are stored slightly below the tie in binary
    const double scaled = std::floor(value * scale + 0.5 + 1e-9);
    return fmt::format("{:.{}f}", scaled / scale, decimals);
}
}  // namespace

std::string format_two_decimals(double value) {
    return round_half_up(value, 2);
}

std::string format_four_decimals(double value) {
    return round_half_up(value, 4);
}

nlohmann::ordered_json MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["model_key"] = model_key;
    j["split"] = to_string(split);
    j["augmented"] = augmented;
    j["labels"] = labels;
    nlohmann::ordered_json classes = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        classes[labels[i]] = {{"precision", per_class[i].precision},
                              {"recall", per_class[i].recall},
                              {"f1", per_class[i].f1},
                              {"support", per_class[i].support}};
    }
    j["per_class"] = std::move(classes);
    j["macro_f1"] = macro_f1;
    j["macro_f1_4dp"] = format_four_decimals(macro_f1);
    j["weighted_f1"] = weighted_f1;
    j["accuracy"] = accuracy;
    j["confusion"] = confusion;
    j["total"] = total;
    j["zero_division"] = 0;
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json &j) {
    MetricsReport r;
    try {
        r.model_key = j.at("model_key").get<std::string>();
        r.split = parse_split(j.at("split").get<std::string>());
        r.augmented = j.value("augmented", false);
        r.labels = j.at("labels").get<std::vector<std::string>>();
        for (const auto &l : r.labels) {
            const auto &c = j.at("per_class").at(l);
            r.per_class.push_back({c.at("precision").get<double>(), c.at("recall").get<double>(), c.at("f1").get<double>(),
                                   c.at("support").get<std::size_t>()});
        }
        r.macro_f1 = j.at("macro_f1").get<double>();
        r.weighted_f1 = j.value("weighted_f1", 0.0);
        r.accuracy = j.value("accuracy", 0.0);
        r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
        r.total = j.at("total").get<std::size_t>();
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("malformed metrics report: ") + e.what());
    }
    return r;
}

std::string report_table(std::span<const TableRow> rows, TableFormat format) {
    if (rows.empty()) {
        throw InvalidArgument("report table needs at least one row");
    }
    std::optional<std::string> best_test;
    for (const auto &row : rows) {
        if (row.test) {
            const std::string v = format_two_decimals(row.test->macro_f1);
            if (!best_test || v > *best_test) {
                best_test = v;
            }
        }
    }
    auto cell = [](const std::optional<MetricsReport> &m) {
        return m ? format_two_decimals(m->macro_f1) : std::string("--");
    };

    std::string out;
    const std::vector<std::string> header{"Model", "Eval F1", "Test F1"};
    switch (format) {
        case TableFormat::plain:
            out += "Model | Eval F1 | Test F1\n";
            break;
        case TableFormat::markdown:
            out += "| Model | Eval F1 | Test F1 |\n|---|---:|---:|\n";
            break;
        case TableFormat::tsv:
            out += csv::format_row(header, '\t') + "\n";
            break;
        case TableFormat::csv:
            out += csv::format_row(header, ',') + "\n";
            break;
    }
    for (const auto &row : rows) {
        const std::string name = row.model_key + (row.augmented ? " (AUG.)" : "");
        const std::string eval = cell(row.eval);
        std::string test = cell(row.test);
        switch (format) {
            case TableFormat::plain:
                out += name + " | " + eval + " | " + test + "\n";
                break;
            case TableFormat::markdown:
                if (row.test && best_test && test == *best_test) {
                    test = "**" + test + "**";
                }
                out += "| " + name + " | " + eval + " | " + test + " |\n";
                break;
            case TableFormat::tsv:
                out += csv::format_row({name, eval, test}, '\t') + "\n";
                break;
            case TableFormat::csv:
                out += csv::format_row({name, eval, test}, ',') + "\n";
                break;
        }
    }
    return out;
}

}  // namespace stancekit
