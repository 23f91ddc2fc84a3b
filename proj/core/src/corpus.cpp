#include "mmrag/corpus.hpp"

#include "mmrag/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

namespace mmrag {

namespace {

using ordered_json = nlohmann::ordered_json;

} // namespace

std::string to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::ner: return "ner";
    case TaskKind::re: return "re";
    case TaskKind::tc: return "tc";
    }
    return "?";
}

std::string to_string(OutputFormat format) {
    switch (format) {
    case OutputFormat::single_label: return "single_label";
    case OutputFormat::entity_list: return "entity_list";
    case OutputFormat::triple_list: return "triple_list";
    }
    return "?";
}

std::string to_string(Split split) {
    return split == Split::train ? "train" : "test";
}

TaskKind task_kind_from_string(std::string_view s) {
    if (s == "ner") return TaskKind::ner;
    if (s == "re") return TaskKind::re;
    if (s == "tc") return TaskKind::tc;
    throw InvalidTaskSpec("unknown task kind \"" + std::string(s) + "\"");
}

OutputFormat output_format_from_string(std::string_view s) {
    if (s == "single_label") return OutputFormat::single_label;
    if (s == "entity_list") return OutputFormat::entity_list;
    if (s == "triple_list") return OutputFormat::triple_list;
    throw InvalidTaskSpec("unknown output format \"" + std::string(s) + "\"");
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw Error("unknown split \"" + std::string(s) + "\"");
}

void TaskSpec::validate() const {
    if (kind == TaskKind::ner) {
        if (!label_set.empty())
            throw InvalidTaskSpec("NER tasks must not define a label set");
    } else {
        if (label_set.empty())
            throw InvalidTaskSpec(to_string(kind) + " tasks require a non-empty label set");
    }
    std::unordered_set<std::string> seen;
    for (const auto& label : label_set) {
        if (label.empty())
            throw InvalidTaskSpec("label set entries must be non-empty");
        if (!seen.insert(label).second)
            throw InvalidTaskSpec("duplicate label \"" + label + "\" in label set");
    }
}

Corpus::Corpus(TaskSpec task, Split split, std::vector<Example> examples)
    : task_(std::move(task)), split_(split), examples_(std::move(examples)) {
    task_.validate();
    by_id_.reserve(examples_.size());
    for (std::size_t i = 0; i < examples_.size(); ++i) {
        const Example& ex = examples_[i];
        if (ex.id.empty())
            throw MalformedRecord(i + 1, "empty id");
        if (!by_id_.emplace(ex.id, i).second)
            throw DuplicateId(ex.id);
        if (ex.class_label && !task_.label_set.empty()) {
            bool known = false;
            for (const auto& label : task_.label_set)
                if (label == *ex.class_label) { known = true; break; }
            if (!known)
                throw LabelOutsideSet(ex.id, *ex.class_label);
        }
    }
}

const Example* Corpus::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &examples_[it->second];
}

Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& task, Split split) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open corpus file " + path.string());

    std::vector<Example> examples;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            throw MalformedRecord(line_number, "empty line");

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecord(line_number, e.what());
        }
        if (!record.is_object())
            throw MalformedRecord(line_number, "record is not a JSON object");
        for (const char* key : {"id", "text", "gold", "class"})
            if (!record.contains(key))
                throw MalformedRecord(line_number, std::string("missing key \"") + key + "\"");
        if (record.size() != 4)
            throw MalformedRecord(line_number, "unexpected extra keys");
        if (!record["id"].is_string() || !record["text"].is_string() || !record["gold"].is_string())
            throw MalformedRecord(line_number, "\"id\", \"text\" and \"gold\" must be strings");
        const auto& cls = record["class"];
        if (!cls.is_string() && !cls.is_null())
            throw MalformedRecord(line_number, "\"class\" must be a string or null");

        Example ex;
        ex.id = record["id"].get<std::string>();
        ex.text = record["text"].get<std::string>();
        ex.gold = record["gold"].get<std::string>();
        if (cls.is_string())
            ex.class_label = cls.get<std::string>();
        if (ex.id.empty())
            throw MalformedRecord(line_number, "empty id");
        examples.push_back(std::move(ex));
    }
    if (examples.empty())
        throw EmptyCorpus("corpus file " + path.string() + " contains no records");

    Corpus corpus(task, split, std::move(examples));
    for (const Example& ex : corpus.examples())
        if (auto warning = prompt_collision_warning(ex))
            std::cerr << "warning: " << path.string() << ": " << *warning << "\n";
    return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const Example& ex : corpus.examples()) {
        ordered_json record;
        record["id"] = ex.id;
        record["text"] = ex.text;
        record["gold"] = ex.gold;
        if (ex.class_label)
            record["class"] = *ex.class_label;
        else
            record["class"] = nullptr;
        out += record.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write corpus file " + path.string());
    out << serialize_corpus(corpus);
    if (!out)
        throw IoError("failed writing corpus file " + path.string());
}

std::vector<std::pair<std::string, std::vector<std::string>>>
class_partition(const Corpus& corpus) {
    const auto& labels = corpus.task().label_set;
    if (labels.empty())
        throw InvalidTaskSpec("class partition requires a task with a label set");

    std::vector<std::pair<std::string, std::vector<std::string>>> buckets;
    buckets.reserve(labels.size());
    std::unordered_map<std::string, std::size_t> bucket_index;
    for (const auto& label : labels) {
        bucket_index.emplace(label, buckets.size());
        buckets.emplace_back(label, std::vector<std::string>{});
    }
    for (const Example& ex : corpus.examples()) {
        if (!ex.class_label)
            throw MissingClassLabel(ex.id);
        buckets[bucket_index.at(*ex.class_label)].second.push_back(ex.id);
    }
    return buckets;
}

std::optional<std::string> prompt_collision_warning(const Example& example) {
    auto line_starts_with_marker = [](const std::string& s) {
        std::size_t pos = 0;
        while (pos <= s.size()) {
            if (s.compare(pos, 7, "Input: ") == 0)
                return true;
            pos = s.find('\n', pos);
            if (pos == std::string::npos)
                return false;
            ++pos;
        }
        return false;
    };
    if (line_starts_with_marker(example.text) || line_starts_with_marker(example.gold))
        return "example \"" + example.id +
               "\" contains a line starting with \"Input: \"; prompts built from it are ambiguous";
    return std::nullopt;
}

} // namespace mmrag
