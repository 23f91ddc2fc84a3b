#pragma once

#include "mmrag/config.hpp"
#include "mmrag/evaluation.hpp"
#include "mmrag/llm.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmrag {

struct QueryOutcome {
    Completion completion;
    Prediction prediction;
    bool failed = false; // generation failed; counted as a wrong prediction
    std::string error;
};

/// One repeat of an experiment. The deterministic persisted record is the
/// trio config.resolved / completions.jsonl / metrics.json (plus
/// details.jsonl); wall-clock timings go to timings.json, outside the
/// byte-reproducibility contract.
struct RunRecord {
    int repeat_index = 0;
    std::optional<std::uint64_t> seed;
    std::filesystem::path dir;
    MetricReport metrics;
    std::vector<QueryOutcome> outcomes; // test corpus order
    std::vector<std::string> failed_ids;
    std::int64_t wall_ms = 0;
};

struct ExperimentResult {
    ExperimentConfig config;
    int repeats_effective = 1;
    AggregateReport aggregate;
    std::vector<RunRecord> records;
};

/// Runs every repeat of one experiment cell: embed, rank, select, prompt,
/// generate, score. Completions flush to disk in test-corpus order as they
/// finish, so an interrupted run leaves a clean prefix and a rerun resumes
/// after it. Deterministic selection with a deterministic client collapses
/// repeats to 1 with a notice.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Expands the sweep grid and runs every cell.
std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base);

/// Re-scores a stored run directory from its completions.jsonl.
MetricReport rescore_run(const ExperimentConfig& config, const std::filesystem::path& run_dir);

/// Reads the stored metrics of a previously executed experiment so reports
/// can be re-emitted without regenerating.
ExperimentResult load_result(const ExperimentConfig& config);

} // namespace mmrag
