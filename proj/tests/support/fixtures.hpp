#pragma once

// Deterministic synthetic corpora for tests. Text is assembled from a
// small biomedical word pool via the shared splitmix64 stream, so every
// fixture is reproducible byte-for-byte.

#include "mmrag/corpus.hpp"
#include "mmrag/rng.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

inline const std::vector<std::string> kDdiLabels = {
    "ddi-mechanism", "ddi-effect", "ddi-advise", "ddi-int"};

inline const std::vector<std::string> kHealthLabels = {
    "strong advice", "weak advice", "no advice"};

inline std::vector<std::string> git_labels() {
    return {"AFFECTS",       "ASSOCIATED_WITH", "AUGMENTS",   "CAUSES",
            "COEXISTS_WITH", "COMPLICATES",     "DIAGNOSES",  "DISRUPTS",
            "INHIBITS",      "INTERACTS_WITH",  "LOCATION_OF", "MANIFESTATION_OF",
            "METHOD_OF",     "OCCURS_IN",       "PART_OF",    "PRECEDES",
            "PREDISPOSES",   "PREVENTS",        "PROCESS_OF", "PRODUCES",
            "STIMULATES",    "TREATS"};
}

inline mmrag::TaskSpec tc_task(std::vector<std::string> labels = kHealthLabels) {
    mmrag::TaskSpec task;
    task.kind = mmrag::TaskKind::tc;
    task.label_set = std::move(labels);
    task.output_format = mmrag::OutputFormat::single_label;
    return task;
}

inline mmrag::TaskSpec re_label_task(std::vector<std::string> labels = kDdiLabels) {
    mmrag::TaskSpec task;
    task.kind = mmrag::TaskKind::re;
    task.label_set = std::move(labels);
    task.output_format = mmrag::OutputFormat::single_label;
    return task;
}

inline mmrag::TaskSpec re_triple_task(std::vector<std::string> labels = git_labels()) {
    mmrag::TaskSpec task;
    task.kind = mmrag::TaskKind::re;
    task.label_set = std::move(labels);
    task.output_format = mmrag::OutputFormat::triple_list;
    return task;
}

inline mmrag::TaskSpec ner_task() {
    mmrag::TaskSpec task;
    task.kind = mmrag::TaskKind::ner;
    task.output_format = mmrag::OutputFormat::entity_list;
    return task;
}

inline std::string sentence(mmrag::SplitMix64& rng, std::size_t words) {
    static const std::vector<std::string> pool = {
        "aspirin",  "warfarin",  "ibuprofen", "insulin",   "metformin", "patients",
        "dosage",   "interacts", "inhibits",  "increases", "decreases", "protein",
        "gene",     "expression", "therapy",  "clinical",  "trial",     "serum",
        "plasma",   "receptor",  "kinase",    "enzyme",    "treatment", "advice",
        "exercise", "daily",     "reduces",   "risk",      "disease",   "chronic"};
    std::string out;
    for (std::size_t w = 0; w < words; ++w) {
        if (w)
            out += ' ';
        out += pool[rng.bounded(pool.size())];
    }
    return out;
}

/// Single-label corpus: class labels cycle through the label set, gold is
/// the class label.
inline mmrag::Corpus make_labeled_corpus(const mmrag::TaskSpec& task, std::size_t n,
                                         mmrag::Split split, std::uint64_t seed,
                                         const std::string& id_prefix = "e") {
    mmrag::SplitMix64 rng(seed);
    std::vector<mmrag::Example> examples;
    examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        mmrag::Example ex;
        ex.id = id_prefix + std::to_string(i);
        ex.text = sentence(rng, 4 + rng.bounded(6));
        const std::string& label = task.label_set[i % task.label_set.size()];
        ex.gold = label;
        ex.class_label = label;
        examples.push_back(std::move(ex));
    }
    return mmrag::Corpus(task, split, std::move(examples));
}

/// Entity-list corpus: gold is a "; "-joined subset of the text tokens.
inline mmrag::Corpus make_ner_corpus(std::size_t n, mmrag::Split split, std::uint64_t seed,
                                     const std::string& id_prefix = "e") {
    mmrag::SplitMix64 rng(seed);
    std::vector<mmrag::Example> examples;
    examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        mmrag::Example ex;
        ex.id = id_prefix + std::to_string(i);
        ex.text = sentence(rng, 5 + rng.bounded(5));
        std::string first = ex.text.substr(0, ex.text.find(' '));
        ex.gold = rng.bounded(3) == 0 ? "" : first;
        if (rng.bounded(4) == 0 && !ex.gold.empty())
            ex.gold += "; " + sentence(rng, 2);
        examples.push_back(std::move(ex));
    }
    return mmrag::Corpus(ner_task(), split, std::move(examples));
}

/// Unique scratch directory; removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("mmrag_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

} // namespace testsupport
