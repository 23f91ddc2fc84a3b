#pragma once

#include "mmrag/corpus.hpp"

#include <span>
#include <string>
#include <vector>

namespace mmrag {

/// Parsed model output. For single_label tasks a successful parse holds
/// exactly one item; extraction tasks hold the "; "-separated items.
/// parse_ok == false implies an empty payload and never matches anything.
struct Prediction {
    std::string query_id;
    std::vector<std::string> items;
    bool parse_ok = true;
};

struct MetricReport {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long n_queries = 0;
};

struct MicroMetrics {
    double precision;
    double recall;
    double f1;
};

/// Strict exact-match parsing: trim outer whitespace; single_label output
/// must equal a label-set member byte-exactly; list outputs split on the
/// literal separator "; " with per-item trimming. Parse failure is data,
/// not an error.
Prediction parse_prediction(const TaskSpec& task, std::string_view query_id,
                            std::string_view raw);

/// Splits a canonical gold string into its items ("; " separator). An empty
/// string is an empty item list.
std::vector<std::string> split_items(std::string_view canonical);

/// Micro P/R/F1 with the 0-denominator-yields-0 convention.
MicroMetrics micro_metrics(long long tp, long long fp, long long fn);

struct QueryCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
};

/// Multiset tp/fp/fn of one prediction against one gold item list.
QueryCounts extraction_counts(const Prediction& pred, const Example& gold);

/// One predicted label vs one gold label per query; byte-exact matches are
/// tp and every miss is both fp and fn, so P == R == F1.
MetricReport score_classification(std::span<const Prediction> preds,
                                  std::span<const Example> golds);

/// Predicted and gold items compared as multisets of exact strings,
/// micro-summed over queries before the final division.
MetricReport score_set_extraction(std::span<const Prediction> preds,
                                  std::span<const Example> golds);

/// Dispatch on the task's output format.
MetricReport score(const TaskSpec& task, std::span<const Prediction> preds,
                   std::span<const Example> golds);

struct AggregateStat {
    double mean = 0.0;
    double stddev = 0.0;
};

struct AggregateReport {
    AggregateStat precision;
    AggregateStat recall;
    AggregateStat f1;
    int n_runs = 0;
    bool single_run = false; // std is 0 by convention, not evidence
    std::vector<MetricReport> runs;
};

/// Arithmetic mean and sample (n-1) standard deviation per metric.
AggregateReport aggregate_runs(std::span<const MetricReport> reports);

} // namespace mmrag
