#include "stancekit/predictions.hpp"

#include "stancekit/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <unordered_set>

namespace stancekit {

using ordered_json = nlohmann::ordered_json;

void validate(const PredictionSet &set, const TaskSpec &task) {
    if (set.task != task.id()) {
        throw TaskMismatch("prediction set is for task " + std::string(to_string(set.task)) + ", expected " + std::string(to_string(task.id())));
    }
    std::unordered_set<std::string> seen;
    for (const auto &row : set.rows) {
        if (!seen.insert(row.id).second) {
            throw InvalidArgument("duplicate prediction id '" + row.id + "'");
        }
        if (!task.contains(row.label)) {
            throw InvalidArgument("prediction for '" + row.id + "' has label '" + row.label + "' outside the label set");
        }
        if (row.scores) {
            if (row.scores->size() != task.size()) {
                throw InvalidArgument("score vector for '" + row.id + "' has wrong length");
            }
            double sum = 0.0;
            for (const double p : *row.scores) {
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw InvalidArgument("score vector for '" + row.id + "' has a negative or non-finite entry");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-6) {
                throw InvalidArgument("score vector for '" + row.id + "' does not sum to 1");
            }
        }
    }
}

std::filesystem::path metadata_path(const std::filesystem::path &predictions) {
    return std::filesystem::path(predictions.string() + ".meta.json");
}

void write_predictions(const std::filesystem::path &path, const PredictionSet &set, const TaskSpec &task) {
    validate(set, task);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw UnwritablePath(path.string());
    }
    for (const auto &row : set.rows) {
        ordered_json j;
        j["id"] = row.id;
        j["label"] = row.label;
        if (row.scores) {
            ordered_json scores = ordered_json::object();
            for (std::size_t i = 0; i < task.size(); ++i) {
                scores[task.labels()[i]] = (*row.scores)[i];
            }
            j["scores"] = std::move(scores);
        }
        out << j.dump() << '\n';
    }
    if (!out) {
        throw UnwritablePath(path.string());
    }

    const auto meta_file = metadata_path(path);
    std::ofstream meta(meta_file, std::ios::binary | std::ios::trunc);
    if (!meta) {
        throw UnwritablePath(meta_file.string());
    }
    ordered_json m;
    m["model_key"] = set.model_key;
    m["task"] = to_string(set.task);
    m["split"] = to_string(set.split);
    m["rows"] = set.rows.size();
    m["labels"] = task.labels();
    ordered_json md = ordered_json::object();
    for (const auto &[k, v] : set.metadata) {
        md[k] = v;
    }
    m["metadata"] = std::move(md);
    meta << m.dump(2) << '\n';
}

PredictionSet read_predictions(const std::filesystem::path &path) {
    const auto meta_file = metadata_path(path);
    std::ifstream meta(meta_file, std::ios::binary);
    if (!meta) {
        throw MissingFile(meta_file.string());
    }
    PredictionSet set;
    std::vector<std::string> labels;
    try {
        const auto m = nlohmann::json::parse(meta);
        set.model_key = m.at("model_key").get<std::string>();
        set.task = parse_task_id(m.at("task").get<std::string>());
        set.split = parse_split(m.at("split").get<std::string>());
        labels = m.at("labels").get<std::vector<std::string>>();
        const auto metadata = m.value("metadata", nlohmann::json::object());
        for (const auto &[k, v] : metadata.items()) {
            set.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    } catch (const nlohmann::json::exception &e) {
        throw MalformedRow(1, meta_file.string() + ": " + e.what());
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            PredictionRow row;
            row.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
            row.label = j.at("label").get<std::string>();
            if (j.contains("scores") && !j.at("scores").is_null()) {
                std::vector<double> scores(labels.size(), 0.0);
                const auto &s = j.at("scores");
                for (std::size_t i = 0; i < labels.size(); ++i) {
                    scores[i] = s.at(labels[i]).get<double>();
                }
                row.scores = std::move(scores);
            }
            set.rows.push_back(std::move(row));
        } catch (const nlohmann::json::exception &e) {
            throw MalformedRow(line_no, path.string() + ": " + e.what());
        }
    }
    validate(set, TaskSpec::builtin(set.task));
    return set;
}

}  // namespace stancekit
