#include "stancekit/corpus.hpp"

#include "stancekit/csv.hpp"
#include "stancekit/error.hpp"
#include "stancekit/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

namespace stancekit {

std::string_view to_string(TaskId id) noexcept {
    switch (id) {
        case TaskId::A: return "A";
        case TaskId::B: return "B";
        case TaskId::C: return "C";
    }
    return "?";
}

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::train: return "train";
        case Split::eval: return "eval";
        case Split::test: return "test";
    }
    return "?";
}

std::string_view to_string(Origin origin) noexcept {
    return origin == Origin::original ? "original" : "augmented";
}

TaskId parse_task_id(std::string_view s) {
    const std::string t = text::to_upper(text::trim(s));
    if (t == "A") return TaskId::A;
    if (t == "B") return TaskId::B;
    if (t == "C") return TaskId::C;
    throw InvalidArgument("unknown task '" + std::string(s) + "' (expected A, B or C)");
}

Split parse_split(std::string_view s) {
    const std::string t = text::to_lower(text::trim(s));
    if (t == "train") return Split::train;
    if (t == "eval" || t == "dev") return Split::eval;
    if (t == "test") return Split::test;
    throw InvalidArgument("unknown split '" + std::string(s) + "' (expected train, eval or test)");
}

Origin parse_origin(std::string_view s) {
    const std::string t = text::to_lower(text::trim(s));
    if (t == "original" || t.empty()) return Origin::original;
    if (t == "augmented") return Origin::augmented;
    throw InvalidArgument("unknown origin '" + std::string(s) + "'");
}

TaskSpec::TaskSpec(TaskId id, std::string name, std::vector<std::string> labels, std::string majority_label)
    : id_(id), name_(std::move(name)), labels_(std::move(labels)), majority_(std::move(majority_label)) {
    if (labels_.empty()) {
        throw InvalidArgument("task label set is empty");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i].empty()) {
            throw InvalidArgument("task label set contains an empty token");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (labels_[i] == labels_[j]) {
                throw InvalidArgument("duplicate label '" + labels_[i] + "'");
            }
        }
    }
    if (!contains(majority_)) {
        throw InvalidArgument("majority label '" + majority_ + "' is not in the label set");
    }
}

const TaskSpec &TaskSpec::builtin(TaskId id) {
    static const TaskSpec a{TaskId::A, "Hate Speech Detection", {"NON-HATE", "HATE"}, "NON-HATE"};
    static const TaskSpec b{TaskId::B, "Target Detection", {"INDIVIDUAL", "ORGANIZATION", "COMMUNITY"}, "INDIVIDUAL"};
    static const TaskSpec c{TaskId::C, "Stance Detection", {"SUPPORT", "OPPOSE", "NEUTRAL"}, "SUPPORT"};
    switch (id) {
        case TaskId::A: return a;
        case TaskId::B: return b;
        case TaskId::C: return c;
    }
    return a;
}

std::optional<std::size_t> TaskSpec::index_of(std::string_view label) const noexcept {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == label) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::string> TaskSpec::canonical_label(std::string_view raw) const {
    const std::string_view t = text::trim(raw);
    for (const auto &l : labels_) {
        if (text::iequals(l, t)) {
            return l;
        }
    }
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
    if (!t.empty() && ec == std::errc{} && ptr == t.data() + t.size() && idx < labels_.size()) {
        return labels_[idx];
    }
    return std::nullopt;
}

const SplitDistribution *DistributionReport::find(Split split) const noexcept {
    for (const auto &s : splits) {
        if (s.split == split) {
            return &s;
        }
    }
    return nullptr;
}

std::int64_t percent_hundredths(std::size_t count, std::size_t total) {
    if (total == 0) {
        return 0;
    }
    // floor(10000 * count / total + 1/2) without leaving integers
    const auto c = static_cast<std::int64_t>(count);
    const auto n = static_cast<std::int64_t>(total);
    return (20000 * c + n) / (2 * n);
}

namespace {

struct Columns {
    std::optional<std::size_t> index, tweet, label, origin, chain;
};

Columns map_header(const csv::Record &header) {
    Columns cols;
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
        const std::string name = text::to_lower(text::trim(header.fields[i]));
        if (name == "index" || name == "id") {
            cols.index = i;
        } else if (name == "tweet" || name == "text") {
            cols.tweet = i;
        } else if (name == "label") {
            cols.label = i;
        } else if (name == "origin") {
            cols.origin = i;
        } else if (name == "chain_id") {
            cols.chain = i;
        }
    }
    return cols;
}

}  // namespace

std::vector<LabeledExample> parse_dataset(std::istream &in, const TaskSpec &task, Split split) {
    std::string contents{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const std::size_t eol = contents.find('\n');
    const char delimiter = csv::detect_delimiter(std::string_view(contents).substr(0, eol));
    std::istringstream body(std::move(contents));
    const std::vector<csv::Record> records = csv::read(body, delimiter);
    if (records.empty()) {
        throw MalformedRow(1, "missing header row");
    }
    const Columns cols = map_header(records.front());
    if (!cols.index || !cols.tweet) {
        throw MalformedRow(records.front().line, "header must name index and tweet columns");
    }
    if (!cols.label && split != Split::test) {
        throw MalformedRow(records.front().line, "header has no label column (only test files may omit it)");
    }

    std::vector<LabeledExample> out;
    out.reserve(records.size() - 1);
    std::unordered_set<std::string> seen;
    const std::size_t width = records.front().fields.size();
    for (std::size_t r = 1; r < records.size(); ++r) {
        const csv::Record &rec = records[r];
        if (rec.fields.size() != width) {
            throw MalformedRow(rec.line, "expected " + std::to_string(width) + " fields, found " + std::to_string(rec.fields.size()));
        }
        LabeledExample ex;
        ex.id = std::string(text::trim(rec.fields[*cols.index]));
        ex.text = rec.fields[*cols.tweet];
        ex.split = split;
        if (ex.id.empty()) {
            throw MalformedRow(rec.line, "empty index");
        }
        if (text::trim(ex.text).empty()) {
            throw MalformedRow(rec.line, "empty tweet text");
        }
        if (cols.label) {
            const std::string &raw = rec.fields[*cols.label];
            if (text::trim(raw).empty()) {
                if (split != Split::test) {
                    throw MalformedRow(rec.line, "empty label");
                }
            } else {
                auto label = task.canonical_label(raw);
                if (!label) {
                    throw UnknownLabel(std::string(text::trim(raw)), rec.line);
                }
                ex.label = std::move(label);
            }
        }
        if (cols.origin) {
            try {
                ex.origin = parse_origin(rec.fields[*cols.origin]);
            } catch (const InvalidArgument &e) {
                throw MalformedRow(rec.line, e.what());
            }
        }
        if (cols.chain && !text::trim(rec.fields[*cols.chain]).empty()) {
            ex.chain_id = std::string(text::trim(rec.fields[*cols.chain]));
        }
        if (ex.chain_id.has_value() != (ex.origin == Origin::augmented)) {
            throw MalformedRow(rec.line, "chain_id must be set exactly for augmented rows");
        }
        if (!seen.insert(ex.id).second) {
            throw DuplicateId(ex.id, rec.line);
        }
        out.push_back(std::move(ex));
    }
    return out;
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path &path, const TaskSpec &task, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw MissingFile(path.string());
    }
    return parse_dataset(in, task, split);
}

void write_dataset(std::ostream &out, std::span<const LabeledExample> examples, bool with_provenance, char delimiter) {
    std::vector<std::string> header{"index", "tweet", "label"};
    if (with_provenance) {
        header.emplace_back("origin");
        header.emplace_back("chain_id");
    }
    out << csv::format_row(header, delimiter) << '\n';
    for (const auto &ex : examples) {
        std::vector<std::string> row{ex.id, ex.text, ex.label.value_or("")};
        if (with_provenance) {
            row.emplace_back(to_string(ex.origin));
            row.emplace_back(ex.chain_id.value_or(""));
        }
        out << csv::format_row(row, delimiter) << '\n';
    }
}

void write_dataset(const std::filesystem::path &path, std::span<const LabeledExample> examples, bool with_provenance, char delimiter) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw UnwritablePath(path.string());
    }
    write_dataset(out, examples, with_provenance, delimiter);
    if (!out) {
        throw UnwritablePath(path.string());
    }
}

DistributionReport distribution(std::span<const LabeledExample> examples, const TaskSpec &task) {
    DistributionReport report;
    report.task = task.id();
    report.labels = task.labels();
    for (const Split split : {Split::train, Split::eval, Split::test}) {
        SplitDistribution d;
        d.split = split;
        d.counts.assign(task.size(), 0);
        for (const auto &ex : examples) {
            if (ex.split != split || !ex.labeled()) {
                continue;
            }
            const auto idx = task.index_of(*ex.label);
            if (!idx) {
                throw UnknownLabel(*ex.label, 0);
            }
            ++d.counts[*idx];
            ++d.total;
        }
        if (d.total == 0) {
            continue;
        }
        d.hundredths.reserve(task.size());
        for (const std::size_t c : d.counts) {
            d.hundredths.push_back(percent_hundredths(c, d.total));
        }
        report.splits.push_back(std::move(d));
    }
    if (report.splits.empty()) {
        throw EmptyDataset();
    }
    return report;
}

std::vector<std::string> minority_labels(const DistributionReport &report, const TaskSpec &task) {
    const SplitDistribution *d = report.find(Split::train);
    if (d == nullptr) {
        if (report.splits.empty()) {
            return {};
        }
        d = &report.splits.front();
    }
    const std::size_t top = *std::max_element(d->counts.begin(), d->counts.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < task.size() && i < d->counts.size(); ++i) {
        if (d->counts[i] != top) {
            out.push_back(task.labels()[i]);
        }
    }
    return out;
}

namespace {
std::string hundredths_str(std::int64_t h) {
    std::string frac = std::to_string(h % 100);
    if (frac.size() < 2) {
        frac.insert(0, "0");
    }
    return std::to_string(h / 100) + "." + frac;
}

std::string title_case(std::string_view s) {
    std::string out = text::to_lower(s);
    if (!out.empty()) {
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    }
    return out;
}
}  // namespace

std::string format_distribution(const DistributionReport &report, char delimiter, bool with_counts) {
    std::vector<std::string> header{"Label"};
    for (const auto &s : report.splits) {
        header.push_back(title_case(to_string(s.split)));
        if (with_counts) {
            header.push_back(title_case(to_string(s.split)) + " count");
        }
    }
    std::string out = csv::format_row(header, delimiter) + "\n";
    for (std::size_t i = 0; i < report.labels.size(); ++i) {
        std::vector<std::string> row{report.labels[i]};
        for (const auto &s : report.splits) {
            row.push_back(hundredths_str(s.hundredths[i]));
            if (with_counts) {
                row.push_back(std::to_string(s.counts[i]));
            }
        }
        out += csv::format_row(row, delimiter) + "\n";
    }
    if (with_counts) {
        std::vector<std::string> row{"total"};
        for (const auto &s : report.splits) {
            row.emplace_back("");
            row.push_back(std::to_string(s.total));
        }
        out += csv::format_row(row, delimiter) + "\n";
    }
    return out;
}

}  // namespace stancekit
