#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mmrag {

enum class TaskKind { ner, re, tc };
enum class OutputFormat { single_label, entity_list, triple_list };
enum class Split { train, test };

std::string to_string(TaskKind kind);
std::string to_string(OutputFormat format);
std::string to_string(Split split);
TaskKind task_kind_from_string(std::string_view s);
OutputFormat output_format_from_string(std::string_view s);
Split split_from_string(std::string_view s);

/// Task definition: what kind of extraction is performed and how outputs
/// are shaped. label_set is required for RE/TC and must be empty for NER.
struct TaskSpec {
    TaskKind kind = TaskKind::tc;
    std::vector<std::string> label_set;
    std::string instruction;
    OutputFormat output_format = OutputFormat::single_label;

    /// Throws InvalidTaskSpec when the invariants do not hold.
    void validate() const;
};

/// One labeled record. gold holds the canonical expected model output
/// (single label, or "; "-joined items for entity/triple lists).
struct Example {
    std::string id;
    std::string text;
    std::string gold;
    std::optional<std::string> class_label;

    bool operator==(const Example&) const = default;
};

/// Immutable after construction; iteration order is file order.
class Corpus {
public:
    Corpus(TaskSpec task, Split split, std::vector<Example> examples);

    const TaskSpec& task() const { return task_; }
    Split split() const { return split_; }
    const std::vector<Example>& examples() const { return examples_; }
    std::size_t size() const { return examples_.size(); }
    const Example& at(std::size_t i) const { return examples_.at(i); }

    /// nullptr when the id is unknown.
    const Example* find(std::string_view id) const;

private:
    TaskSpec task_;
    Split split_;
    std::vector<Example> examples_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Loads the unified JSONL format: one object per line with keys
/// "id", "text", "gold", "class" (string or null).
Corpus load_corpus(const std::filesystem::path& path, const TaskSpec& task, Split split);

/// Canonical JSONL serialization; load_corpus(save) round-trips byte-exact.
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Buckets example ids by class label, one bucket per label_set entry in
/// label_set order. Empty buckets are kept (Class Mode reports those).
std::vector<std::pair<std::string, std::vector<std::string>>>
class_partition(const Corpus& corpus);

/// Set when a demo text or gold would collide with the prompt layout
/// (a line starting with "Input: "); callers warn, loading still succeeds.
std::optional<std::string> prompt_collision_warning(const Example& example);

} // namespace mmrag
