#pragma once

#include "mmrag/corpus.hpp"
#include "mmrag/llm.hpp"
#include "mmrag/selection.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mmrag {

struct EmbedderConfig {
    std::string kind = "reference"; // "reference" | "remote"
    std::string name = "reference"; // remote model name / display name
    std::string query_name;         // optional distinct query-encoder model
    std::size_t dims = 64;
    std::string endpoint;
    std::size_t batch_size = 64;
    std::string cache; // cache file path; empty disables caching
};

struct LlmConfig {
    std::string kind = "mock";        // "mock" | "remote"
    std::string spec = "mock:oracle"; // mock spec string or remote model name
    std::string endpoint;
    GenerationParams params;
    RetryPolicy retry;
};

struct RunConfig {
    int repeats = 1;
    std::vector<std::uint64_t> seeds; // one per repeat in Random Mode
    int max_inflight = 1;
    std::string output_dir = "out";
};

/// Optional grid over selection modes, shot counts, gaps, retrievers and
/// models. Expansion is the full cartesian product.
struct SweepConfig {
    std::vector<std::string> modes;
    std::vector<int> ks;
    std::vector<int> gaps;
    std::vector<std::string> retrievers; // "reference:<dims>" | "remote:<model>:<dims>"
    std::vector<std::string> llms;       // "mock:..." | "remote:<model>"

    bool empty() const {
        return modes.empty() && ks.empty() && gaps.empty() && retrievers.empty() &&
               llms.empty();
    }
};

struct ExperimentConfig {
    TaskSpec task;
    std::string dataset = "dataset";
    std::string train_path;
    std::string test_path;
    EmbedderConfig embedder;
    LlmConfig llm;
    SelectionSpec selection;
    RunConfig run;
    SweepConfig sweep;

    /// Directory the config file lives in; relative paths resolve here.
    std::filesystem::path base_dir;

    /// Throws ConfigInvalid naming the offending field.
    void validate() const;

    std::filesystem::path resolve_path(const std::string& p) const;

    /// Canonical dump with every field explicit; persisted as
    /// `config.resolved` and byte-stable across executions.
    std::string resolved(int repeats_effective) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Schema dump: the canonical rendering of a default configuration.
std::string config_schema();

/// Cartesian expansion of the sweep lists (base values stand in for absent
/// lists). Cell output dirs nest under the base output dir.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base);

} // namespace mmrag
