#pragma once

#include "mmrag/runner.hpp"

#include <filesystem>
#include <span>
#include <string>

namespace mmrag {

/// Per-repeat rows:
/// task,dataset,model,retriever,mode,k,gap,seed,repeat,precision,recall,f1,n_queries
/// gap is empty unless Diversity Mode, seed empty unless Random Mode,
/// metrics carry four decimal places.
std::string render_results_csv(std::span<const ExperimentResult> results);

/// Aggregate pivot mirroring the published layout: one row per
/// (task, dataset, retriever, mode, k, gap), Precision/Recall/F1 columns
/// per model, mean +/- std when a cell aggregates repeated runs. Failed
/// generations are listed in the footer.
std::string render_results_markdown(std::span<const ExperimentResult> results);

/// One row per (mode, k, gap, retriever, model, metric) with mean and std.
std::string render_plotdata_csv(std::span<const ExperimentResult> results);

/// Writes results.csv, results.md and plotdata.csv into out_dir.
/// Rendering is pure: re-emitting the same results is byte-identical.
void emit_reports(std::span<const ExperimentResult> results,
                  const std::filesystem::path& out_dir);

} // namespace mmrag
