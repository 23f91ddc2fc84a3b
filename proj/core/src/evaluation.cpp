#include "mmrag/evaluation.hpp"

#include "mmrag/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace mmrag {

namespace {

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n\v\f";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos)
        return {};
    auto end = s.find_last_not_of(ws);
    return s.substr(begin, end - begin + 1);
}

void check_alignment(std::span<const Prediction> preds, std::span<const Example> golds) {
    if (preds.size() != golds.size())
        throw AlignmentError("prediction/gold count mismatch: " + std::to_string(preds.size()) +
                             " vs " + std::to_string(golds.size()));
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i].query_id != golds[i].id)
            throw AlignmentError("prediction/gold id mismatch at position " + std::to_string(i) +
                                 ": \"" + preds[i].query_id + "\" vs \"" + golds[i].id + "\"");
}

MetricReport finish(long long tp, long long fp, long long fn, long long n_queries) {
    MetricReport report;
    report.tp = tp;
    report.fp = fp;
    report.fn = fn;
    report.n_queries = n_queries;
    auto m = micro_metrics(tp, fp, fn);
    report.precision = m.precision;
    report.recall = m.recall;
    report.f1 = m.f1;
    return report;
}

} // namespace

std::vector<std::string> split_items(std::string_view canonical) {
    std::string_view s = trim(canonical);
    std::vector<std::string> items;
    if (s.empty())
        return items;
    std::size_t pos = 0;
    while (true) {
        std::size_t sep = s.find("; ", pos);
        if (sep == std::string_view::npos) {
            items.emplace_back(trim(s.substr(pos)));
            break;
        }
        items.emplace_back(trim(s.substr(pos, sep - pos)));
        pos = sep + 2;
    }
    return items;
}

Prediction parse_prediction(const TaskSpec& task, std::string_view query_id,
                            std::string_view raw) {
    Prediction pred;
    pred.query_id = std::string(query_id);
    std::string_view trimmed = trim(raw);

    if (task.output_format == OutputFormat::single_label) {
        for (const std::string& label : task.label_set) {
            if (trimmed == label) {
                pred.items.emplace_back(label);
                return pred;
            }
        }
        pred.parse_ok = false;
        return pred;
    }

    pred.items = split_items(trimmed);
    return pred;
}

MicroMetrics micro_metrics(long long tp, long long fp, long long fn) {
    MicroMetrics m{0.0, 0.0, 0.0};
    if (tp + fp > 0)
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0)
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (m.precision == m.recall)
        m.f1 = m.precision; // exact harmonic mean of equal values
    else if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

MetricReport score_classification(std::span<const Prediction> preds,
                                  std::span<const Example> golds) {
    check_alignment(preds, golds);
    long long tp = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].parse_ok && preds[i].items.size() == 1 && preds[i].items[0] == golds[i].gold)
            ++tp;
    }
    const auto n = static_cast<long long>(preds.size());
    return finish(tp, n - tp, n - tp, n);
}

QueryCounts extraction_counts(const Prediction& pred, const Example& gold) {
    std::vector<std::string> gold_items = split_items(gold.gold);

    std::map<std::string, long long> gold_counts;
    for (const auto& item : gold_items)
        ++gold_counts[item];

    long long query_tp = 0;
    if (pred.parse_ok) {
        for (const auto& item : pred.items) {
            auto it = gold_counts.find(item);
            if (it != gold_counts.end() && it->second > 0) {
                --it->second;
                ++query_tp;
            }
        }
    }
    const auto n_pred = pred.parse_ok ? static_cast<long long>(pred.items.size()) : 0;
    return QueryCounts{query_tp, n_pred - query_tp,
                       static_cast<long long>(gold_items.size()) - query_tp};
}

MetricReport score_set_extraction(std::span<const Prediction> preds,
                                  std::span<const Example> golds) {
    check_alignment(preds, golds);
    long long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        QueryCounts c = extraction_counts(preds[i], golds[i]);
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
    }
    return finish(tp, fp, fn, static_cast<long long>(preds.size()));
}

MetricReport score(const TaskSpec& task, std::span<const Prediction> preds,
                   std::span<const Example> golds) {
    if (task.output_format == OutputFormat::single_label)
        return score_classification(preds, golds);
    return score_set_extraction(preds, golds);
}

AggregateReport aggregate_runs(std::span<const MetricReport> reports) {
    if (reports.empty())
        throw EmptyInput("aggregate_runs requires at least one report");

    auto stat = [&](auto metric) {
        AggregateStat s;
        bool all_equal = true;
        for (const auto& r : reports)
            if (metric(r) != metric(reports.front()))
                all_equal = false;
        if (all_equal) { // std exactly 0, mean exactly the value
            s.mean = metric(reports.front());
            return s;
        }
        double sum = 0.0;
        for (const auto& r : reports)
            sum += metric(r);
        s.mean = sum / static_cast<double>(reports.size());
        double sq = 0.0;
        for (const auto& r : reports) {
            double d = metric(r) - s.mean;
            sq += d * d;
        }
        s.stddev = std::sqrt(sq / static_cast<double>(reports.size() - 1));
        return s;
    };

    AggregateReport out;
    out.precision = stat([](const MetricReport& r) { return r.precision; });
    out.recall = stat([](const MetricReport& r) { return r.recall; });
    out.f1 = stat([](const MetricReport& r) { return r.f1; });
    out.n_runs = static_cast<int>(reports.size());
    out.single_run = reports.size() == 1;
    out.runs.assign(reports.begin(), reports.end());
    return out;
}

} // namespace mmrag
