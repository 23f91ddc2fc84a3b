#include "mmrag/runner.hpp"

#include "mmrag/cache.hpp"
#include "mmrag/errors.hpp"
#include "mmrag/prompt.hpp"
#include "mmrag/remote.hpp"
#include "mmrag/rng.hpp"
#include "mmrag/version.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace mmrag {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::shared_ptr<const Corpus> load_split(const ExperimentConfig& config, Split split) {
    const std::string& raw = split == Split::train ? config.train_path : config.test_path;
    return std::make_shared<const Corpus>(
        load_corpus(config.resolve_path(raw), config.task, split));
}

std::unique_ptr<Embedder> make_embedder(const ExperimentConfig& config, bool for_queries) {
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

bool llm_is_deterministic(const ExperimentConfig& config) {
    return config.llm.kind == "mock" || config.llm.params.temperature == 0.0;
}

std::string completions_line(const QueryOutcome& outcome) {
    ordered_json record;
    record["id"] = outcome.completion.query_id;
    record["raw"] = outcome.completion.raw_text;
    if (outcome.failed)
        record["error"] = outcome.error;
    return record.dump();
}

std::string metrics_json(const RunRecord& record) {
    ordered_json out;
    out["repeat"] = record.repeat_index;
    if (record.seed)
        out["seed"] = *record.seed;
    else
        out["seed"] = nullptr;
    out["n_queries"] = record.metrics.n_queries;
    out["tp"] = record.metrics.tp;
    out["fp"] = record.metrics.fp;
    out["fn"] = record.metrics.fn;
    out["precision"] = record.metrics.precision;
    out["recall"] = record.metrics.recall;
    out["f1"] = record.metrics.f1;
    out["failed_ids"] = record.failed_ids;
    out["version"] = version_string;
    return out.dump();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << content;
    if (!out)
        throw IoError("failed writing " + path.string());
}

void write_details(const std::filesystem::path& path, const ExperimentConfig& config,
                   const Corpus& test, std::span<const QueryOutcome> outcomes) {
    std::string content;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const Example& gold = test.at(i);
        const QueryOutcome& outcome = outcomes[i];
        ordered_json record;
        record["id"] = gold.id;
        record["gold"] = gold.gold;
        record["raw"] = outcome.completion.raw_text;
        record["parsed"] = outcome.prediction.items;
        if (config.task.output_format == OutputFormat::single_label) {
            record["correct"] = outcome.prediction.parse_ok &&
                                outcome.prediction.items.size() == 1 &&
                                outcome.prediction.items[0] == gold.gold;
        } else {
            QueryCounts c = extraction_counts(outcome.prediction, gold);
            record["correct"] = ordered_json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
        }
        content += record.dump();
        content += '\n';
    }
    write_file(path, content);
}

/// Completions already on disk from an interrupted run. Ordered flushing
/// guarantees they form a prefix of the test corpus order.
std::vector<std::pair<std::string, QueryOutcome>>
load_resume_prefix(const std::filesystem::path& file, const Corpus& test) {
    std::vector<std::pair<std::string, QueryOutcome>> prefix;
    std::ifstream in(file, std::ios::binary);
    if (!in)
        return prefix;
    std::string line;
    std::uintmax_t good_bytes = 0;
    bool torn = false;
    while (std::getline(in, line)) {
        bool had_newline = !in.eof();
        json record;
        bool ok = had_newline;
        if (ok) {
            try {
                record = json::parse(line);
            } catch (const json::exception&) {
                ok = false;
            }
        }
        ok = ok && record.is_object() && record.contains("id") && record["id"].is_string() &&
             record.contains("raw") && record["raw"].is_string();
        if (!ok) {
            torn = true;
            break;
        }
        std::size_t i = prefix.size();
        if (i >= test.size() || record["id"].get<std::string>() != test.at(i).id)
            throw Error("cannot resume " + file.string() +
                        ": stored completions do not match the test corpus order");
        QueryOutcome outcome;
        outcome.completion.query_id = record["id"].get<std::string>();
        outcome.completion.raw_text = record["raw"].get<std::string>();
        if (record.contains("error") && record["error"].is_string()) {
            outcome.failed = true;
            outcome.error = record["error"].get<std::string>();
        }
        prefix.emplace_back(line, std::move(outcome));
        good_bytes += line.size() + 1;
    }
    if (torn) {
        std::cerr << "notice: truncating torn trailing line of " << file.string() << "\n";
        std::filesystem::resize_file(file, good_bytes);
    }
    return prefix;
}

/// Flushes completion lines strictly in test-corpus order as slots finish.
class OrderedSink {
public:
    OrderedSink(std::filesystem::path file, std::size_t total, std::size_t already_done)
        : file_(std::move(file)), done_(total, false), next_(already_done) {
        for (std::size_t i = 0; i < already_done; ++i)
            done_[i] = true;
        out_.open(file_, std::ios::binary | std::ios::app);
        if (!out_)
            throw IoError("cannot open " + file_.string());
    }

    void complete(std::size_t index, const std::string& line) {
        std::lock_guard lock(mutex_);
        lines_[index] = line;
        done_[index] = true;
        while (next_ < done_.size() && done_[next_]) {
            auto it = lines_.find(next_);
            if (it != lines_.end()) {
                out_ << it->second << '\n';
                out_.flush();
                lines_.erase(it);
            }
            ++next_;
        }
    }

private:
    std::filesystem::path file_;
    std::ofstream out_;
    std::mutex mutex_;
    std::map<std::size_t, std::string> lines_;
    std::vector<char> done_;
    std::size_t next_;
};

struct RankedContext {
    const EmbeddedCorpus* train = nullptr;
    const std::vector<EmbeddingVector>* query_vectors = nullptr; // test order
};

Demonstrations select_for_query(const ExperimentConfig& config, const Corpus& train,
                                const RankedContext& ranked_ctx, const Example& query,
                                std::size_t query_index,
                                std::optional<std::uint64_t> run_seed) {
    const SelectionSpec& sel = config.selection;
    if (sel.mode == SelectionMode::random) {
        std::uint64_t seed = derive_query_seed(run_seed.value_or(0), query.id);
        return select_random(train, sel.k, seed);
    }

    RankedList ranked =
        rank(*ranked_ctx.train, (*ranked_ctx.query_vectors)[query_index], query.id);
    Demonstrations demos;
    switch (sel.mode) {
    case SelectionMode::top:
        demos = select_top(ranked, train, sel.k);
        break;
    case SelectionMode::diversity:
        demos = select_diversity(ranked, train, sel.k, sel.gap);
        break;
    case SelectionMode::per_class:
        demos = select_class(ranked, train, config.task.label_set);
        break;
    case SelectionMode::random:
        break; // handled above
    }
    if (sel.order == DemoOrder::similar_last &&
        (sel.mode == SelectionMode::top || sel.mode == SelectionMode::diversity))
        std::reverse(demos.begin(), demos.end());
    return demos;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    auto train = load_split(config, Split::train);
    auto test = load_split(config, Split::test);

    const bool needs_ranking = config.selection.mode != SelectionMode::random;
    std::unique_ptr<EmbeddingCache> cache;
    if (!config.embedder.cache.empty())
        cache = std::make_unique<EmbeddingCache>(config.resolve_path(config.embedder.cache));

    EmbeddedCorpus embedded_train;
    std::vector<EmbeddingVector> query_vectors;
    if (needs_ranking) {
        auto corpus_embedder = make_embedder(config, /*for_queries=*/false);
        embedded_train = embed_corpus(*corpus_embedder, train, cache.get());
        auto query_embedder = make_embedder(config, /*for_queries=*/true);
        EmbeddedCorpus embedded_test = embed_corpus(*query_embedder, test, cache.get());
        query_vectors = std::move(embedded_test.vectors);
    }
    RankedContext ranked_ctx{&embedded_train, &query_vectors};

    int repeats_effective = config.run.repeats;
    if (repeats_effective > 1 && config.selection.mode != SelectionMode::random &&
        llm_is_deterministic(config)) {
        std::cerr << "notice: selection and client are deterministic; "
                     "collapsing repeats from "
                  << config.run.repeats << " to 1\n";
        repeats_effective = 1;
    }

    const std::string resolved = config.resolved(repeats_effective);
    const std::filesystem::path out_dir = config.resolve_path(config.run.output_dir);
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> run_plan_ids;
    run_plan_ids.reserve(test->size());
    for (const Example& ex : test->examples())
        run_plan_ids.push_back(ex.id);

    const PromptTemplate tmpl = default_template(config.task);

    ExperimentResult result;
    result.config = config;
    result.repeats_effective = repeats_effective;

    for (int repeat = 0; repeat < repeats_effective; ++repeat) {
        const auto run_started = std::chrono::steady_clock::now();

        RunRecord record;
        record.repeat_index = repeat;
        if (config.selection.mode == SelectionMode::random)
            record.seed = config.run.seeds[static_cast<std::size_t>(repeat)];
        record.dir = out_dir / ("repeat_" + std::to_string(repeat));
        std::filesystem::create_directories(record.dir);

        const auto resolved_path = record.dir / "config.resolved";
        if (std::filesystem::exists(resolved_path)) {
            std::ifstream in(resolved_path, std::ios::binary);
            std::ostringstream buf;
            buf << in.rdbuf();
            if (buf.str() != resolved)
                throw Error("run directory " + record.dir.string() +
                            " was produced by a different configuration; refusing to resume");
        } else {
            write_file(resolved_path, resolved);
        }

        auto client = make_llm_client(config.llm.kind, config.llm.spec, config.llm.endpoint,
                                      config.llm.params, config.llm.retry, run_plan_ids,
                                      config.selection.k);

        const auto completions_path = record.dir / "completions.jsonl";
        auto prefix = load_resume_prefix(completions_path, *test);

        const std::size_t n = test->size();
        std::vector<QueryOutcome> outcomes(n);
        for (std::size_t i = 0; i < prefix.size(); ++i)
            outcomes[i] = std::move(prefix[i].second);

        OrderedSink sink(completions_path, n, prefix.size());

        std::atomic<std::size_t> next_query{prefix.size()};
        std::mutex fatal_mutex;
        std::size_t fatal_index = n;
        std::exception_ptr fatal;

        auto worker = [&] {
            while (true) {
                std::size_t i = next_query.fetch_add(1);
                if (i >= n)
                    return;
                {
                    std::lock_guard lock(fatal_mutex);
                    if (fatal)
                        return;
                }
                const Example& query = test->at(i);
                QueryOutcome outcome;
                outcome.completion.query_id = query.id;
                outcome.completion.client_name = client->name();
                try {
                    Demonstrations demos = select_for_query(config, *train, ranked_ctx, query,
                                                            i, record.seed);
                    std::string prompt = build_prompt(tmpl, demos, query.text);
                    outcome.completion = client->generate(query, prompt);
                } catch (const TransportError& e) {
                    outcome.failed = true;
                    outcome.error = e.what();
                } catch (const ContextLengthExceeded& e) {
                    outcome.failed = true;
                    outcome.error = e.what();
                } catch (const MalformedResponse& e) {
                    outcome.failed = true;
                    outcome.error = e.what();
                } catch (...) {
                    std::lock_guard lock(fatal_mutex);
                    if (!fatal || i < fatal_index) {
                        fatal = std::current_exception();
                        fatal_index = i;
                    }
                    return;
                }
                outcomes[i] = outcome;
                sink.complete(i, completions_line(outcomes[i]));
            }
        };

        const int pool =
            std::max(1, std::min<int>(config.run.max_inflight, static_cast<int>(n)));
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int t = 0; t < pool; ++t)
            threads.emplace_back(worker);
        for (auto& t : threads)
            t.join();

        if (fatal) {
            try {
                std::rethrow_exception(fatal);
            } catch (const Error& e) {
                throw Error("repeat " + std::to_string(repeat) + ", query \"" +
                            test->at(fatal_index).id + "\": " + e.what());
            }
        }

        std::vector<Prediction> predictions;
        predictions.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Example& query = test->at(i);
            if (outcomes[i].failed) {
                outcomes[i].prediction.query_id = query.id;
                outcomes[i].prediction.parse_ok = false;
                record.failed_ids.push_back(query.id);
            } else {
                outcomes[i].prediction =
                    parse_prediction(config.task, query.id, outcomes[i].completion.raw_text);
            }
            predictions.push_back(outcomes[i].prediction);
        }

        record.metrics = score(config.task, predictions, test->examples());
        record.outcomes = std::move(outcomes);
        record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - run_started)
                             .count();

        write_file(record.dir / "metrics.json", metrics_json(record) + "\n");
        write_details(record.dir / "details.jsonl", config, *test, record.outcomes);
        write_file(record.dir / "timings.json",
                   "{\"wall_ms\": " + std::to_string(record.wall_ms) + "}\n");

        result.records.push_back(std::move(record));
    }

    std::vector<MetricReport> reports;
    reports.reserve(result.records.size());
    for (const RunRecord& r : result.records)
        reports.push_back(r.metrics);
    result.aggregate = aggregate_runs(reports);
    return result;
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base) {
    std::vector<ExperimentResult> results;
    for (const ExperimentConfig& cell : expand_sweep(base))
        results.push_back(run_experiment(cell));
    return results;
}

MetricReport rescore_run(const ExperimentConfig& config, const std::filesystem::path& run_dir) {
    auto test = load_split(config, Split::test);
    const auto completions_path = run_dir / "completions.jsonl";
    if (!std::filesystem::exists(completions_path))
        throw IoError("no completions.jsonl in " + run_dir.string());

    std::ifstream in(completions_path, std::ios::binary);
    std::vector<Prediction> predictions;
    std::string line;
    std::size_t i = 0;
    while (std::getline(in, line)) {
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("corrupt completions line " + std::to_string(i + 1) + ": " + e.what());
        }
        if (i >= test->size() || record.value("id", "") != test->at(i).id)
            throw AlignmentError("stored completions do not match the test corpus");
        if (record.contains("error")) {
            Prediction failed;
            failed.query_id = test->at(i).id;
            failed.parse_ok = false;
            predictions.push_back(std::move(failed));
        } else {
            predictions.push_back(
                parse_prediction(config.task, test->at(i).id, record.value("raw", "")));
        }
        ++i;
    }
    if (i != test->size())
        throw AlignmentError("stored run holds " + std::to_string(i) + " completions for " +
                             std::to_string(test->size()) + " test queries");
    return score(config.task, predictions, test->examples());
}

ExperimentResult load_result(const ExperimentConfig& config) {
    const auto out_dir = config.resolve_path(config.run.output_dir);
    ExperimentResult result;
    result.config = config;

    std::vector<MetricReport> reports;
    for (int repeat = 0;; ++repeat) {
        const auto dir = out_dir / ("repeat_" + std::to_string(repeat));
        const auto metrics_path = dir / "metrics.json";
        if (!std::filesystem::exists(metrics_path))
            break;
        std::ifstream in(metrics_path, std::ios::binary);
        json stored;
        try {
            in >> stored;
        } catch (const json::exception& e) {
            throw IoError("corrupt metrics.json in " + dir.string() + ": " + e.what());
        }
        RunRecord record;
        record.repeat_index = repeat;
        record.dir = dir;
        if (stored.contains("seed") && stored["seed"].is_number())
            record.seed = stored["seed"].get<std::uint64_t>();
        record.metrics.tp = stored.value("tp", 0LL);
        record.metrics.fp = stored.value("fp", 0LL);
        record.metrics.fn = stored.value("fn", 0LL);
        record.metrics.precision = stored.value("precision", 0.0);
        record.metrics.recall = stored.value("recall", 0.0);
        record.metrics.f1 = stored.value("f1", 0.0);
        record.metrics.n_queries = stored.value("n_queries", 0LL);
        if (stored.contains("failed_ids"))
            for (const auto& id : stored["failed_ids"])
                record.failed_ids.push_back(id.get<std::string>());
        reports.push_back(record.metrics);
        result.records.push_back(std::move(record));
    }
    if (result.records.empty())
        throw IoError("no stored runs under " + out_dir.string());
    result.repeats_effective = static_cast<int>(result.records.size());
    result.aggregate = aggregate_runs(reports);
    return result;
}

} // namespace mmrag
