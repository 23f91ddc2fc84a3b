// mmrag command line: embed / rank / select / run / score / report.
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include "mmrag/cache.hpp"
#include "mmrag/config.hpp"
#include "mmrag/errors.hpp"
#include "mmrag/remote.hpp"
#include "mmrag/report.hpp"
#include "mmrag/rng.hpp"
#include "mmrag/runner.hpp"
#include "mmrag/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace mmrag;

std::shared_ptr<const Corpus> load_split_cli(const ExperimentConfig& config, Split split) {
    const std::string& raw = split == Split::train ? config.train_path : config.test_path;
    return std::make_shared<const Corpus>(
        load_corpus(config.resolve_path(raw), config.task, split));
}

std::unique_ptr<Embedder> embedder_for(const ExperimentConfig& config, bool for_queries) {
    if (config.embedder.kind == "reference")
        return std::make_unique<ReferenceEmbedder>(config.embedder.dims);
    const char* key = std::getenv("MMRAG_EMBED_API_KEY");
    std::string model = config.embedder.name;
    if (for_queries && !config.embedder.query_name.empty())
        model = config.embedder.query_name;
    return std::make_unique<RemoteEmbedder>(config.embedder.endpoint, model,
                                            config.embedder.dims, config.embedder.batch_size,
                                            key ? key : "");
}

int cmd_embed(const ExperimentConfig& config) {
    if (config.embedder.cache.empty())
        throw ConfigInvalid("embedder.cache", "the embed subcommand requires a cache path");
    EmbeddingCache cache(config.resolve_path(config.embedder.cache));

    auto train = load_split_cli(config, Split::train);
    auto corpus_embedder = embedder_for(config, false);
    embed_corpus(*corpus_embedder, train, &cache);

    auto test = load_split_cli(config, Split::test);
    auto query_embedder = embedder_for(config, true);
    embed_corpus(*query_embedder, test, &cache);

    std::cout << "cache " << cache.file().string() << " holds " << cache.size()
              << " vectors\n";
    return 0;
}

RankedList rank_for_query(const ExperimentConfig& config, const std::string& query_id) {
    auto train = load_split_cli(config, Split::train);
    auto test = load_split_cli(config, Split::test);
    const Example* query = test->find(query_id);
    if (!query)
        throw Error("query id \"" + query_id + "\" not found in the test split");

    std::unique_ptr<EmbeddingCache> cache;
    if (!config.embedder.cache.empty())
        cache = std::make_unique<EmbeddingCache>(config.resolve_path(config.embedder.cache));

    auto corpus_embedder = embedder_for(config, false);
    EmbeddedCorpus embedded = embed_corpus(*corpus_embedder, train, cache.get());

    auto query_embedder = embedder_for(config, true);
    std::vector<std::string> one{query->text};
    auto vectors = query_embedder->embed(one);
    if (vectors.size() != 1)
        throw MalformedResponse("query embedding returned " + std::to_string(vectors.size()) +
                                " vectors");
    return rank(embedded, vectors[0], query_id);
}

int cmd_rank(const ExperimentConfig& config, const std::string& query_id) {
    std::cout << ranked_to_tsv(rank_for_query(config, query_id));
    return 0;
}

int cmd_select(ExperimentConfig config, const std::string& query_id) {
    Demonstrations demos;
    if (config.selection.mode == SelectionMode::random) {
        auto train = load_split_cli(config, Split::train);
        std::uint64_t run_seed = config.run.seeds.empty() ? 0 : config.run.seeds.front();
        demos = select_random(*train, config.selection.k,
                              derive_query_seed(run_seed, query_id));
    } else {
        auto train = load_split_cli(config, Split::train);
        RankedList ranked = rank_for_query(config, query_id);
        switch (config.selection.mode) {
        case SelectionMode::top:
            demos = select_top(ranked, *train, config.selection.k);
            break;
        case SelectionMode::diversity:
            demos = select_diversity(ranked, *train, config.selection.k, config.selection.gap);
            break;
        case SelectionMode::per_class:
            demos = select_class(ranked, *train, config.task.label_set);
            break;
        case SelectionMode::random:
            break;
        }
    }
    for (const Example& demo : demos)
        std::cout << demo.id << "\n";
    return 0;
}

int cmd_run(const ExperimentConfig& config) {
    std::vector<ExperimentResult> results;
    if (!config.sweep.empty())
        results = run_sweep(config);
    else
        results.push_back(run_experiment(config));

    const auto report_dir = config.resolve_path(config.run.output_dir);
    emit_reports(results, report_dir);

    for (const ExperimentResult& result : results) {
        std::cout << result.config.dataset << " " << to_string(result.config.selection.mode)
                  << " k=" << result.config.selection.k << ": f1 mean "
                  << result.aggregate.f1.mean;
        if (result.aggregate.n_runs > 1)
            std::cout << " std " << result.aggregate.f1.stddev << " over "
                      << result.aggregate.n_runs << " repeats";
        std::cout << "\n";
    }
    std::cout << "reports written to " << report_dir.string() << "\n";
    return 0;
}

int cmd_score(const ExperimentConfig& config, const std::string& run_dir) {
    MetricReport metrics = rescore_run(config, run_dir);
    nlohmann::ordered_json out;
    out["n_queries"] = metrics.n_queries;
    out["tp"] = metrics.tp;
    out["fp"] = metrics.fp;
    out["fn"] = metrics.fn;
    out["precision"] = metrics.precision;
    out["recall"] = metrics.recall;
    out["f1"] = metrics.f1;
    std::cout << out.dump() << "\n";

    // Tripwire: recomputation must agree with the stored report.
    const auto stored_path = std::filesystem::path(run_dir) / "metrics.json";
    if (std::filesystem::exists(stored_path)) {
        std::ifstream in(stored_path, std::ios::binary);
        nlohmann::json stored;
        in >> stored;
        if (stored.value("tp", -1LL) != metrics.tp || stored.value("fp", -1LL) != metrics.fp ||
            stored.value("fn", -1LL) != metrics.fn) {
            std::cerr << "error: recomputed metrics disagree with stored metrics.json\n";
            return 2;
        }
    }
    return 0;
}

int cmd_report(const ExperimentConfig& config) {
    std::vector<ExperimentResult> results;
    if (!config.sweep.empty()) {
        for (const ExperimentConfig& cell : expand_sweep(config))
            results.push_back(load_result(cell));
    } else {
        results.push_back(load_result(config));
    }
    const auto report_dir = config.resolve_path(config.run.output_dir);
    emit_reports(results, report_dir);
    std::cout << "reports written to " << report_dir.string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MMRAG example-selection harness"};
    app.set_version_flag("--version", std::string("mmrag ") + mmrag::version_string);
    app.require_subcommand(1);

    std::string config_path;
    std::string query_id;
    std::string run_dir;
    std::string mode_override, order_override;
    int k_override = -1, gap_override = -1;
    std::int64_t seed_override = -1;
    bool seed_given = false;

    auto* embed = app.add_subcommand("embed", "populate the embedding cache");
    embed->add_option("--config", config_path, "experiment config file")->required();

    auto* rank_cmd = app.add_subcommand("rank", "dump the ranked list for one query as TSV");
    rank_cmd->add_option("--config", config_path)->required();
    rank_cmd->add_option("--query-id", query_id, "test-split example id")->required();

    auto* select_cmd = app.add_subcommand("select", "print selected demonstration ids");
    select_cmd->add_option("--config", config_path)->required();
    select_cmd->add_option("--query-id", query_id)->required();
    select_cmd->add_option("--mode", mode_override, "override selection mode");
    select_cmd->add_option("--k", k_override, "override demonstration count");
    select_cmd->add_option("--gap", gap_override, "override diversity gap");
    select_cmd->add_option("--seed", seed_override, "override random seed")
        ->each([&](const std::string&) { seed_given = true; });

    auto* run_cmd = app.add_subcommand("run", "run the full experiment (or sweep)");
    run_cmd->add_option("--config", config_path)->required();

    auto* score_cmd = app.add_subcommand("score", "re-score a stored run directory");
    score_cmd->add_option("--config", config_path)->required();
    score_cmd->add_option("--run-dir", run_dir, "repeat_<n> directory")->required();

    auto* report_cmd = app.add_subcommand("report", "re-emit tables from stored runs");
    report_cmd->add_option("--config", config_path)->required();

    auto* schema_cmd = app.add_subcommand("config-schema", "print the config schema with defaults");

    CLI11_PARSE(app, argc, argv);

    try {
        if (schema_cmd->parsed()) {
            std::cout << mmrag::config_schema();
            return 0;
        }

        mmrag::ExperimentConfig config;
        try {
            config = mmrag::load_config(config_path);
        } catch (const mmrag::ConfigInvalid& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }

        if (select_cmd->parsed()) {
            if (!mode_override.empty())
                config.selection.mode = mmrag::selection_mode_from_string(mode_override);
            if (k_override > 0)
                config.selection.k = k_override;
            if (gap_override > 0)
                config.selection.gap = gap_override;
            if (seed_given) {
                config.run.seeds.assign(1, static_cast<std::uint64_t>(seed_override));
                config.run.repeats = 1;
            }
        }

        try {
            if (embed->parsed()) return cmd_embed(config);
            if (rank_cmd->parsed()) return cmd_rank(config, query_id);
            if (select_cmd->parsed()) return cmd_select(config, query_id);
            if (run_cmd->parsed()) return cmd_run(config);
            if (score_cmd->parsed()) return cmd_score(config, run_dir);
            if (report_cmd->parsed()) return cmd_report(config);
        } catch (const mmrag::ConfigInvalid& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
