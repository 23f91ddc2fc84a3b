#include "mmrag/report.hpp"

#include "mmrag/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

namespace mmrag {

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

int effective_k(const ExperimentConfig& config) {
    if (config.selection.mode == SelectionMode::per_class)
        return static_cast<int>(config.task.label_set.size());
    return config.selection.k;
}

std::string retriever_name(const ExperimentConfig& config) {
    return config.selection.mode == SelectionMode::random ? "none" : config.embedder.name;
}

std::string gap_field(const ExperimentConfig& config) {
    return config.selection.mode == SelectionMode::diversity
               ? std::to_string(config.selection.gap)
               : "";
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += "\"\"";
        else
            out.push_back(c);
    }
    out += "\"";
    return out;
}

} // namespace

std::string render_results_csv(std::span<const ExperimentResult> results) {
    std::string out =
        "task,dataset,model,retriever,mode,k,gap,seed,repeat,precision,recall,f1,n_queries\n";
    for (const ExperimentResult& result : results) {
        const ExperimentConfig& config = result.config;
        for (const RunRecord& record : result.records) {
            out += to_string(config.task.kind);
            out += ',';
            out += csv_escape(config.dataset);
            out += ',';
            out += csv_escape(config.llm.spec);
            out += ',';
            out += csv_escape(retriever_name(config));
            out += ',';
            out += to_string(config.selection.mode);
            out += ',';
            out += std::to_string(effective_k(config));
            out += ',';
            out += gap_field(config);
            out += ',';
            out += record.seed ? std::to_string(*record.seed) : "";
            out += ',';
            out += std::to_string(record.repeat_index);
            out += ',';
            out += fixed4(record.metrics.precision);
            out += ',';
            out += fixed4(record.metrics.recall);
            out += ',';
            out += fixed4(record.metrics.f1);
            out += ',';
            out += std::to_string(record.metrics.n_queries);
            out += '\n';
        }
    }
    return out;
}

std::string render_plotdata_csv(std::span<const ExperimentResult> results) {
    std::string out = "mode,k,gap,retriever,model,metric,mean,std\n";
    for (const ExperimentResult& result : results) {
        const ExperimentConfig& config = result.config;
        const auto row = [&](const char* metric, const AggregateStat& stat) {
            out += to_string(config.selection.mode);
            out += ',';
            out += std::to_string(effective_k(config));
            out += ',';
            out += gap_field(config);
            out += ',';
            out += csv_escape(retriever_name(config));
            out += ',';
            out += csv_escape(config.llm.spec);
            out += ',';
            out += metric;
            out += ',';
            out += fixed4(stat.mean);
            out += ',';
            out += fixed4(stat.stddev);
            out += '\n';
        };
        row("precision", result.aggregate.precision);
        row("recall", result.aggregate.recall);
        row("f1", result.aggregate.f1);
    }
    return out;
}

std::string render_results_markdown(std::span<const ExperimentResult> results) {
    // Pivot: rows keyed by (task, dataset, retriever, mode, k, gap), one
    // P/R/F1 column group per model in first-seen order.
    struct Cell {
        const ExperimentResult* result = nullptr;
    };
    using RowKey = std::tuple<std::string, std::string, std::string, std::string, int, std::string>;

    std::vector<std::string> models;
    std::vector<RowKey> row_order;
    std::map<RowKey, std::map<std::string, Cell>> rows;

    for (const ExperimentResult& result : results) {
        const ExperimentConfig& config = result.config;
        const std::string model = config.llm.spec;
        if (std::find(models.begin(), models.end(), model) == models.end())
            models.push_back(model);
        RowKey key{to_string(config.task.kind), config.dataset, retriever_name(config),
                   to_string(config.selection.mode), effective_k(config), gap_field(config)};
        if (!rows.count(key))
            row_order.push_back(key);
        rows[key][model] = Cell{&result};
    }

    auto stat_text = [](const AggregateStat& stat, bool with_std) {
        std::string s = fixed4(stat.mean);
        if (with_std)
            s += " ± " + fixed4(stat.stddev);
        return s;
    };

    std::string out = "# Results\n\n";
    out += "| Task | Dataset | Retriever | Mode | k | Gap |";
    for (const std::string& model : models)
        out += " " + model + " P | " + model + " R | " + model + " F1 |";
    out += "\n|---|---|---|---|---|---|";
    for (std::size_t i = 0; i < models.size(); ++i)
        out += "---|---|---|";
    out += "\n";

    for (const RowKey& key : row_order) {
        out += "| " + std::get<0>(key) + " | " + std::get<1>(key) + " | " + std::get<2>(key) +
               " | " + std::get<3>(key) + " | " + std::to_string(std::get<4>(key)) + " | " +
               std::get<5>(key) + " |";
        for (const std::string& model : models) {
            auto it = rows[key].find(model);
            if (it == rows[key].end() || !it->second.result) {
                out += "  |  |  |";
                continue;
            }
            const AggregateReport& agg = it->second.result->aggregate;
            const bool with_std = agg.n_runs > 1;
            out += " " + stat_text(agg.precision, with_std) + " | " +
                   stat_text(agg.recall, with_std) + " | " + stat_text(agg.f1, with_std) + " |";
        }
        out += "\n";
    }

    std::vector<std::string> failures;
    for (const ExperimentResult& result : results)
        for (const RunRecord& record : result.records)
            for (const std::string& id : record.failed_ids)
                failures.push_back(result.config.dataset + "/" +
                                   to_string(result.config.selection.mode) + "/repeat " +
                                   std::to_string(record.repeat_index) + ": " + id);

    out += "\nFailed generations (counted as wrong predictions): ";
    if (failures.empty()) {
        out += "none\n";
    } else {
        out += "\n";
        for (const std::string& f : failures)
            out += "- " + f + "\n";
    }
    return out;
}

void emit_reports(std::span<const ExperimentResult> results,
                  const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream out(out_dir / name, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write " + (out_dir / name).string());
        out << content;
        if (!out)
            throw IoError("failed writing " + (out_dir / name).string());
    };
    write("results.csv", render_results_csv(results));
    write("results.md", render_results_markdown(results));
    write("plotdata.csv", render_plotdata_csv(results));
}

} // namespace mmrag
