#include "stancekit/prompt.hpp"

#include "stancekit/parallel.hpp"
#include "stancekit/random.hpp"
#include "stancekit/text.hpp"

#include <json.hpp>

#include <optional>
#include <unordered_set>

namespace stancekit {

namespace {
constexpr std::string_view role_prefix = "Role: You are a helpful AI assistant. You are given the task of ";
constexpr std::string_view retry_suffix = "\n\nReply with the label only, in the format <label> Your_Predicted_Label <\\label>.";
}  // namespace

PromptWording default_wording(const TaskSpec &task) {
    switch (task.id()) {
        case TaskId::A:
            return {task.name(), "Hate speech is language that attacks, demeans or threatens a person or a group"};
        case TaskId::B:
            return {task.name(), "The target of a hateful text is the party it is directed at, which may be a single person, an organization or a community"};
        case TaskId::C:
            return {task.name(), "Stance is the position a text takes towards climate activism, whether it supports it, opposes it or stays neutral"};
    }
    return {task.name(), task.name()};
}

PromptWording wording_from_config(const Config &cfg, const TaskSpec &task) {
    PromptWording w = default_wording(task);
    const std::string prefix = "prompt." + std::string(to_string(task.id())) + ".";
    if (auto name = cfg.get(prefix + "name")) {
        w.task_name = std::move(*name);
    }
    if (auto def = cfg.get(prefix + "definition")) {
        w.definition = std::move(*def);
    }
    return w;
}

std::string format_label_tag(std::string_view label) {
    return "<label> " + std::string(label) + " <\\label>";
}

PromptTemplate make_template(const TaskSpec &task, const PromptWording &wording, std::vector<Exemplar> exemplars) {
    PromptTemplate t;
    t.role_block = std::string(role_prefix) + wording.task_name + ".";
    std::string choices;
    for (std::size_t i = 0; i < task.size(); ++i) {
        choices += (i == 0 ? "either " : " or ") + task.labels()[i];
    }
    t.definition_block = "Definition: " + wording.definition + ". You will be given a text to label " + choices + ".";
    t.task_block = "Task: Generate the label for this text in the following format: " + format_label_tag("Your_Predicted_Label") + ". Thanks.";
    t.exemplars = std::move(exemplars);
    return t;
}

std::string PromptTemplate::render(std::string_view input_text) const {
    std::string out = role_block + "\n" + definition_block + "\n";
    if (!exemplars.empty()) {
        out += "Examples:\n";
        for (const auto &e : exemplars) {
            out += "Text: " + e.text + "\n" + "Label: " + format_label_tag(e.label) + "\n";
        }
    }
    out += task_block + "\n";
    out += "Text: ";
    out += input_text;
    return out;
}

std::vector<Exemplar> sample_exemplars(const TaskSpec &task, std::size_t shots, std::span<const LabeledExample> pool, std::uint64_t seed) {
    if (shots == 0) {
        return {};
    }
    std::vector<std::vector<const LabeledExample *>> by_label(task.size());
    for (const auto &ex : pool) {
        if (!ex.labeled()) {
            continue;
        }
        if (const auto idx = task.index_of(*ex.label)) {
            by_label[*idx].push_back(&ex);
        }
    }
    Rng rng(seed);
    for (std::size_t l = 0; l < task.size(); ++l) {
        if (by_label[l].size() < shots) {
            throw InsufficientExemplars(task.labels()[l], by_label[l].size(), shots);
        }
        rng.shuffle(by_label[l]);
    }
    std::vector<Exemplar> out;
    out.reserve(shots * task.size());
    for (std::size_t s = 0; s < shots; ++s) {
        for (std::size_t l = 0; l < task.size(); ++l) {
            out.push_back({by_label[l][s]->text, task.labels()[l]});
        }
    }
    return out;
}

std::string build_prompt(const TaskSpec &task, std::string_view input_text, std::size_t shots, std::span<const LabeledExample> exemplar_pool,
                         std::uint64_t seed, const PromptWording &wording) {
    return make_template(task, wording, sample_exemplars(task, shots, exemplar_pool, seed)).render(input_text);
}

std::string build_prompt(const TaskSpec &task, std::string_view input_text, std::size_t shots, std::span<const LabeledExample> exemplar_pool,
                         std::uint64_t seed) {
    return build_prompt(task, input_text, shots, exemplar_pool, seed, default_wording(task));
}

namespace {

std::size_t ifind(std::string_view haystack, std::string_view needle, std::size_t from) {
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        if (text::iequals(haystack.substr(i, needle.size()), needle)) {
            return i;
        }
    }
    return std::string_view::npos;
}

std::optional<std::string> match_label(std::string_view candidate, const TaskSpec &task) {
    candidate = text::trim(candidate);
    for (const auto &l : task.labels()) {
        if (text::iequals(l, candidate)) {
            return l;
        }
    }
    return std::nullopt;
}

}  // namespace

ParsedLabel parse_label(std::string_view response, const TaskSpec &task) {
    constexpr std::string_view opener = "<label>";
    const std::size_t open = ifind(response, opener, 0);
    if (open == std::string_view::npos) {
        return ParseFailure{"no <label> tag"};
    }
    const std::size_t body = open + opener.size();
    const std::size_t close_a = ifind(response, "</label>", body);
    const std::size_t close_b = ifind(response, "<\\label>", body);
    const std::size_t close = std::min(close_a, close_b);
    if (close == std::string_view::npos) {
        return ParseFailure{"no closing label tag"};
    }
    const std::string_view inner = text::trim(response.substr(body, close - body));
    if (auto l = match_label(inner, task)) {
        return *l;
    }
    const std::size_t space = inner.find_first_of(" \t\r\n");
    if (space != std::string_view::npos) {
        if (auto l = match_label(inner.substr(0, space), task)) {
            return *l;
        }
    }
    return ParseFailure{"'" + std::string(inner) + "' is not a label of task " + std::string(to_string(task.id()))};
}

std::string HashingMockLLM::complete(std::string_view prompt) {
    std::string_view input = prompt;
    if (const std::size_t pos = prompt.rfind("Text: "); pos != std::string_view::npos) {
        input = prompt.substr(pos + 6);
    }
    if (const std::size_t cut = input.find("\n\n"); cut != std::string_view::npos) {
        input = input.substr(0, cut);
    }
    const std::string &label = labels_[text::fnv1a64(input) % labels_.size()];
    return "Sure. " + format_label_tag(label);
}

namespace {

struct Outcome {
    std::optional<PredictionRow> row;
    bool fallback = false;
    bool reprompted = false;
    std::vector<nlohmann::ordered_json> log;
};

nlohmann::ordered_json log_record(const std::string &id, const std::string &prompt, const std::string &response, const ParsedLabel &parsed,
                                  bool fallback, int attempt) {
    nlohmann::ordered_json j;
    j["example_id"] = id;
    j["prompt"] = prompt;
    j["response"] = response;
    if (const auto *l = std::get_if<std::string>(&parsed)) {
        j["parsed"] = *l;
    } else {
        j["parsed"] = nullptr;
    }
    j["fallback_used"] = fallback;
    j["attempt"] = attempt;
    return j;
}

}  // namespace

PredictionSet classify_with_llm(std::span<const LabeledExample> examples, const TaskSpec &task, LLMClient &client,
                                std::span<const LabeledExample> exemplar_pool, const ClassifyOptions &options) {
    if (examples.empty()) {
        throw EmptyDataset("nothing to classify");
    }
    std::unordered_set<std::string_view> classified;
    for (const auto &ex : examples) {
        classified.insert(ex.id);
    }
    std::vector<LabeledExample> pool;
    for (const auto &ex : exemplar_pool) {
        if (classified.find(ex.id) == classified.end()) {
            pool.push_back(ex);
        }
    }
    const PromptWording wording = options.wording.task_name.empty() ? default_wording(task) : options.wording;
    const PromptTemplate tmpl = make_template(task, wording, sample_exemplars(task, options.shots, pool, options.seed));

    std::vector<Outcome> outcomes(examples.size());
    std::string failure;
    try {
        parallel_for(examples.size(), options.max_in_flight, [&](std::size_t i) {
            const LabeledExample &ex = examples[i];
            Outcome &out = outcomes[i];
            const std::string prompt = tmpl.render(ex.text);
            std::string response = client.complete(prompt);
            ParsedLabel parsed = parse_label(response, task);
            out.log.push_back(log_record(ex.id, prompt, response, parsed, false, 1));
            if (std::holds_alternative<ParseFailure>(parsed)) {
                out.reprompted = true;
                const std::string retry_prompt = prompt + std::string(retry_suffix);
                response = client.complete(retry_prompt);
                parsed = parse_label(response, task);
                out.fallback = std::holds_alternative<ParseFailure>(parsed);
                out.log.push_back(log_record(ex.id, retry_prompt, response, parsed, out.fallback, 2));
            }
            const std::string label = out.fallback ? task.majority_label() : std::get<std::string>(parsed);
            out.row = PredictionRow{ex.id, label, std::nullopt};
        });
    } catch (const Error &e) {
        failure = e.what();
    } catch (const std::exception &e) {
        failure = e.what();
    }

    PredictionSet set;
    set.model_key = options.shots == 0 ? "llm-zero-shot" : "llm-few-shot";
    set.task = task.id();
    set.split = examples.front().split;
    std::size_t fallbacks = 0;
    std::size_t reprompts = 0;
    for (auto &o : outcomes) {
        if (options.log != nullptr) {
            for (const auto &rec : o.log) {
                *options.log << rec.dump() << '\n';
            }
        }
        if (!o.row) {
            continue;
        }
        fallbacks += o.fallback ? 1 : 0;
        reprompts += o.reprompted ? 1 : 0;
        set.rows.push_back(std::move(*o.row));
    }
    set.metadata["shots"] = std::to_string(options.shots);
    set.metadata["seed"] = std::to_string(options.seed);
    set.metadata["fallback_count"] = std::to_string(fallbacks);
    set.metadata["reprompt_count"] = std::to_string(reprompts);
    if (!failure.empty()) {
        set.metadata["aborted"] = "true";
        throw ClassificationAborted(failure, std::move(set));
    }
    return set;
}

}  // namespace stancekit
