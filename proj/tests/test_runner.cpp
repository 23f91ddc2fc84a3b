#include "mmrag/errors.hpp"
#include "mmrag/report.hpp"
#include "mmrag/runner.hpp"

#include "support/fixtures.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <thread>

using namespace mmrag;
using namespace testsupport;

namespace {

struct ExperimentFixture {
    TempDir dir{"runner"};
    ExperimentConfig config;

    ExperimentFixture(const TaskSpec& task, std::size_t n_train, std::size_t n_test,
                      std::uint64_t seed = 1) {
        Corpus train = make_labeled_corpus(task, n_train, Split::train, seed, "t");
        Corpus test = make_labeled_corpus(task, n_test, Split::test, seed + 1, "q");
        save_corpus(train, dir.path / "train.jsonl");
        save_corpus(test, dir.path / "test.jsonl");

        config.task = task;
        config.dataset = "fixture";
        config.train_path = "train.jsonl";
        config.test_path = "test.jsonl";
        config.base_dir = dir.path;
        config.embedder.dims = 32;
        config.selection.mode = SelectionMode::top;
        config.selection.k = 3;
        config.run.output_dir = "out";
    }
};

std::string record_bytes(const std::filesystem::path& run_dir) {
    return read_file(run_dir / "completions.jsonl") + "\x1e" +
           read_file(run_dir / "metrics.json") + "\x1e" + read_file(run_dir / "details.jsonl");
}

} // namespace

TEST_CASE("oracle mock end to end scores F1 = 1 exactly in every mode") {
    SUBCASE("top mode, classification") {
        ExperimentFixture fx(tc_task(), 20, 8);
        ExperimentResult result = run_experiment(fx.config);
        CHECK(result.aggregate.f1.mean == 1.0);
        CHECK(result.records[0].metrics.tp == 8);
    }

    SUBCASE("diversity mode, classification") {
        ExperimentFixture fx(tc_task(), 20, 8);
        fx.config.selection.mode = SelectionMode::diversity;
        fx.config.selection.gap = 2;
        CHECK(run_experiment(fx.config).aggregate.f1.mean == 1.0);
    }

    SUBCASE("class mode, relation labels") {
        ExperimentFixture fx(re_label_task(), 16, 6);
        fx.config.selection.mode = SelectionMode::per_class;
        CHECK(run_experiment(fx.config).aggregate.f1.mean == 1.0);
    }

    SUBCASE("random mode, entity lists") {
        TempDir dir("ner");
        Corpus train = make_ner_corpus(15, Split::train, 3, "t");
        Corpus test = make_ner_corpus(6, Split::test, 4, "q");
        save_corpus(train, dir.path / "train.jsonl");
        save_corpus(test, dir.path / "test.jsonl");
        ExperimentConfig config;
        config.task = ner_task();
        config.train_path = "train.jsonl";
        config.test_path = "test.jsonl";
        config.base_dir = dir.path;
        config.selection.mode = SelectionMode::random;
        config.selection.k = 3;
        config.run.seeds = {42};
        config.run.output_dir = "out";
        CHECK(run_experiment(config).aggregate.f1.mean == 1.0);
    }

    SUBCASE("triple lists with 22 classes") {
        ExperimentFixture fx(re_triple_task(), 44, 5);
        fx.config.selection.mode = SelectionMode::per_class;
        ExperimentResult result = run_experiment(fx.config);
        CHECK(result.aggregate.f1.mean == 1.0);
    }
}

TEST_CASE("random repeats with rate-0 corrupt mock are identical with std 0") {
    ExperimentFixture fx(tc_task(), 20, 10);
    fx.config.selection.mode = SelectionMode::random;
    fx.config.llm.spec = "mock:corrupt:5:0.0";
    fx.config.run.repeats = 3;
    fx.config.run.seeds = {1, 2, 3};

    ExperimentResult result = run_experiment(fx.config);
    REQUIRE(result.records.size() == 3);
    for (const RunRecord& record : result.records) {
        CHECK(record.metrics.f1 == 1.0);
        CHECK(record.metrics.tp == 10);
    }
    CHECK(result.aggregate.f1.stddev == 0.0);
    CHECK(result.aggregate.f1.mean == 1.0);
}

TEST_CASE("corrupt mock rate 0.3 over 10 queries gives mean F1 0.7 with std 0") {
    ExperimentFixture fx(tc_task(), 20, 10);
    fx.config.selection.mode = SelectionMode::random;
    fx.config.llm.spec = "mock:corrupt:7:0.3";
    fx.config.run.repeats = 3;
    fx.config.run.seeds = {1, 2, 3};

    ExperimentResult result = run_experiment(fx.config);
    // The corrupt subset is fixed per run plan, so each repeat misses the
    // same round(0.3*10) = 3 queries.
    for (const RunRecord& record : result.records) {
        CHECK(record.metrics.tp == 7);
        CHECK(record.metrics.f1 == 0.7);
    }
    CHECK(result.aggregate.f1.mean == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(result.aggregate.f1.stddev == 0.0);
}

TEST_CASE("deterministic selection collapses repeats to one with a notice") {
    ExperimentFixture fx(tc_task(), 20, 5);
    fx.config.run.repeats = 3; // top mode + mock client
    ExperimentResult result = run_experiment(fx.config);
    CHECK(result.repeats_effective == 1);
    CHECK(result.records.size() == 1);
    std::string resolved = read_file(result.records[0].dir / "config.resolved");
    CHECK(resolved.find("repeats = 1") != std::string::npos);
    CHECK(resolved.find("repeats_requested = 3") != std::string::npos);
}

TEST_CASE("repeats survive when the remote client samples at temperature > 0") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices":[{"message":{"content":"strong advice"}}]})",
                        "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ExperimentFixture fx(tc_task(), 12, 3);
    fx.config.llm.kind = "remote";
    fx.config.llm.spec = "loopback-llm";
    fx.config.llm.endpoint = "http://127.0.0.1:" + std::to_string(port);
    fx.config.llm.params.temperature = 0.7;
    fx.config.llm.retry = RetryPolicy{0, 1};
    fx.config.run.repeats = 2;

    ExperimentResult result = run_experiment(fx.config);
    CHECK(result.repeats_effective == 2);
    CHECK(result.records.size() == 2);

    server.stop();
    thread.join();
}

TEST_CASE("max_inflight does not change results") {
    ExperimentFixture fx(tc_task(), 30, 24);
    fx.config.llm.spec = "mock:corrupt:11:0.25";
    fx.config.run.max_inflight = 1;
    run_experiment(fx.config);
    std::string serial = record_bytes(fx.dir.path / "out" / "repeat_0");

    std::filesystem::remove_all(fx.dir.path / "out");
    fx.config.run.max_inflight = 16;
    run_experiment(fx.config);
    std::string parallel = record_bytes(fx.dir.path / "out" / "repeat_0");

    CHECK(serial == parallel);
}

TEST_CASE("resuming an interrupted run reproduces the uninterrupted record") {
    // Loopback LLM so generation calls are countable.
    httplib::Server server;
    std::atomic<int> requests{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        requests++;
        res.set_content(R"({"choices":[{"message":{"content":"strong advice"}}]})",
                        "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ExperimentFixture fx(tc_task(), 20, 12);
    fx.config.llm.kind = "remote";
    fx.config.llm.spec = "loopback-llm";
    fx.config.llm.endpoint = "http://127.0.0.1:" + std::to_string(port);
    fx.config.llm.retry = RetryPolicy{0, 1};

    run_experiment(fx.config);
    CHECK(requests.load() == 12);
    const auto run_dir = fx.dir.path / "out" / "repeat_0";
    std::string full = record_bytes(run_dir);

    // interrupt after 7 queries: keep a 7-line prefix, wipe the derived files
    std::string completions = read_file(run_dir / "completions.jsonl");
    std::size_t pos = 0;
    for (int i = 0; i < 7; ++i)
        pos = completions.find('\n', pos) + 1;
    write_file(run_dir / "completions.jsonl", completions.substr(0, pos));
    std::filesystem::remove(run_dir / "metrics.json");
    std::filesystem::remove(run_dir / "details.jsonl");

    requests = 0;
    run_experiment(fx.config);
    CHECK(requests.load() == 5); // only the missing suffix is regenerated
    CHECK(record_bytes(run_dir) == full);

    // a torn trailing line is truncated and regenerated
    write_file(run_dir / "completions.jsonl", completions.substr(0, pos) + "{\"id\":\"tor");
    requests = 0;
    run_experiment(fx.config);
    CHECK(requests.load() == 5);
    CHECK(record_bytes(run_dir) == full);

    server.stop();
    thread.join();
}

TEST_CASE("resume refuses a run directory from a different configuration") {
    ExperimentFixture fx(tc_task(), 20, 5);
    run_experiment(fx.config);
    fx.config.selection.k = 4; // different resolved config, same output dir
    try {
        run_experiment(fx.config);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("different configuration") != std::string::npos);
    }
}

TEST_CASE("failed generations count as wrong and are listed") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        if (req.body.find("FAILME") != std::string::npos) {
            res.status = 500;
            res.set_content("boom", "text/plain");
            return;
        }
        res.set_content(R"({"choices":[{"message":{"content":"strong advice"}}]})",
                        "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir dir("fail");
    TaskSpec task = tc_task();
    std::vector<Example> train_examples, test_examples;
    for (int i = 0; i < 6; ++i)
        train_examples.push_back({"t" + std::to_string(i), "training sentence " + std::to_string(i),
                                  "strong advice", "strong advice"});
    for (int i = 0; i < 4; ++i)
        test_examples.push_back({"q" + std::to_string(i),
                                 i == 2 ? "FAILME now" : "query sentence " + std::to_string(i),
                                 "strong advice", "strong advice"});
    save_corpus(Corpus(task, Split::train, train_examples), dir.path / "train.jsonl");
    save_corpus(Corpus(task, Split::test, test_examples), dir.path / "test.jsonl");

    ExperimentConfig config;
    config.task = task;
    config.train_path = "train.jsonl";
    config.test_path = "test.jsonl";
    config.base_dir = dir.path;
    config.selection.k = 2;
    config.llm.kind = "remote";
    config.llm.spec = "loopback-llm";
    config.llm.endpoint = "http://127.0.0.1:" + std::to_string(port);
    config.llm.retry = RetryPolicy{1, 1};
    config.run.output_dir = "out";

    ExperimentResult result = run_experiment(config);
    CHECK(result.records[0].metrics.tp == 3);
    CHECK(result.records[0].metrics.n_queries == 4);
    CHECK(result.records[0].failed_ids == std::vector<std::string>{"q2"});
    CHECK(result.aggregate.f1.mean == 0.75);

    std::string markdown = render_results_markdown({&result, 1});
    CHECK(markdown.find("q2") != std::string::npos);

    server.stop();
    thread.join();
}

TEST_CASE("selection.order flips the demonstration order inside the prompt") {
    // Echo server: the completion is the prompt itself, so the demo order
    // becomes visible in completions.jsonl.
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request& req, httplib::Response& res) {
        auto body = nlohmann::json::parse(req.body);
        nlohmann::json reply = {
            {"choices",
             {{{"message", {{"content", body["messages"][0]["content"].get<std::string>()}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    auto first_demo_line = [&](DemoOrder order) {
        ExperimentFixture fx(tc_task(), 10, 1);
        fx.config.selection.order = order;
        fx.config.selection.k = 3;
        fx.config.llm.kind = "remote";
        fx.config.llm.spec = "echo-llm";
        fx.config.llm.endpoint = "http://127.0.0.1:" + std::to_string(port);
        fx.config.llm.retry = RetryPolicy{0, 1};
        ExperimentResult result = run_experiment(fx.config);
        const std::string& prompt = result.records[0].outcomes[0].completion.raw_text;
        auto start = prompt.find("Input: ");
        return prompt.substr(start, prompt.find('\n', start) - start);
    };

    std::string forward = first_demo_line(DemoOrder::similar_first);
    std::string reversed = first_demo_line(DemoOrder::similar_last);
    CHECK(forward != reversed);

    server.stop();
    thread.join();
}

TEST_CASE("rescore_run reproduces the stored metrics exactly") {
    ExperimentFixture fx(tc_task(), 20, 10);
    fx.config.llm.spec = "mock:corrupt:7:0.3";
    ExperimentResult result = run_experiment(fx.config);

    MetricReport rescored = rescore_run(fx.config, fx.dir.path / "out" / "repeat_0");
    CHECK(rescored.tp == result.records[0].metrics.tp);
    CHECK(rescored.fp == result.records[0].metrics.fp);
    CHECK(rescored.fn == result.records[0].metrics.fn);
    CHECK(rescored.precision == result.records[0].metrics.precision);
    CHECK(rescored.f1 == result.records[0].metrics.f1);
}

TEST_CASE("report rendering") {
    SUBCASE("csv has the pinned header and one row per repeat") {
        ExperimentFixture fx(tc_task(), 20, 5);
        ExperimentResult result = run_experiment(fx.config);
        std::string csv = render_results_csv({&result, 1});
        auto first_line = csv.substr(0, csv.find('\n'));
        CHECK(first_line ==
              "task,dataset,model,retriever,mode,k,gap,seed,repeat,precision,recall,f1,n_queries");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 2); // header + 1 data row
        CHECK(csv.find("tc,fixture,mock:oracle,reference,top,3,,,0,1.0000,1.0000,1.0000,5") !=
              std::string::npos);
    }

    SUBCASE("diversity sweep emits one plotdata row per gap per metric") {
        ExperimentFixture fx(tc_task(), 30, 5);
        fx.config.selection.mode = SelectionMode::diversity;
        fx.config.selection.k = 5;
        fx.config.sweep.gaps = {1, 2, 3};
        auto results = run_sweep(fx.config);
        REQUIRE(results.size() == 3);

        std::string plotdata = render_plotdata_csv(results);
        for (const char* metric : {"precision", "recall", "f1"}) {
            std::size_t count = 0, pos = 0;
            std::string needle = std::string(",") + metric + ",";
            while ((pos = plotdata.find(needle, pos)) != std::string::npos) {
                ++count;
                ++pos;
            }
            CHECK(count == 3); // one per gap
        }
        for (const char* key : {"diversity,5,1,", "diversity,5,2,", "diversity,5,3,"})
            CHECK(plotdata.find(key) != std::string::npos);
    }

    SUBCASE("random mode rows carry the seed, others leave it empty") {
        ExperimentFixture fx(tc_task(), 20, 5);
        fx.config.selection.mode = SelectionMode::random;
        fx.config.run.repeats = 2;
        fx.config.run.seeds = {31, 32};
        ExperimentResult result = run_experiment(fx.config);
        std::string csv = render_results_csv({&result, 1});
        CHECK(csv.find(",random,3,,31,0,") != std::string::npos);
        CHECK(csv.find(",random,3,,32,1,") != std::string::npos);
        CHECK(csv.find(",none,random,") != std::string::npos); // retriever is unused
    }

    SUBCASE("class mode reports k = |label_set|") {
        ExperimentFixture fx(re_label_task(), 16, 4);
        fx.config.selection.mode = SelectionMode::per_class;
        ExperimentResult result = run_experiment(fx.config);
        std::string csv = render_results_csv({&result, 1});
        CHECK(csv.find(",class,4,,") != std::string::npos);
    }

    SUBCASE("emitting the same results twice is byte-identical") {
        ExperimentFixture fx(tc_task(), 20, 5);
        ExperimentResult result = run_experiment(fx.config);
        TempDir out_a("emita");
        TempDir out_b("emitb");
        emit_reports({&result, 1}, out_a.path);
        emit_reports({&result, 1}, out_b.path);
        for (const char* name : {"results.csv", "results.md", "plotdata.csv"})
            CHECK(read_file(out_a.path / name) == read_file(out_b.path / name));
    }

    SUBCASE("markdown pivots precision/recall/f1 per model") {
        ExperimentFixture fx(tc_task(), 20, 5);
        fx.config.sweep.llms = {"mock:oracle", "mock:corrupt:3:0.4"};
        auto results = run_sweep(fx.config);
        std::string markdown = render_results_markdown(results);
        CHECK(markdown.find("mock:oracle P | mock:oracle R | mock:oracle F1") !=
              std::string::npos);
        CHECK(markdown.find("mock:corrupt:3:0.4 P") != std::string::npos);
        // both models share one pivot row
        CHECK(markdown.find("| tc | fixture | reference | top | 3 |  | 1.0000 | 1.0000 | 1.0000 |") !=
              std::string::npos);
    }
}

TEST_CASE("load_result reconstructs stored aggregates for report re-emission") {
    ExperimentFixture fx(tc_task(), 20, 10);
    fx.config.selection.mode = SelectionMode::random;
    fx.config.llm.spec = "mock:corrupt:7:0.3";
    fx.config.run.repeats = 3;
    fx.config.run.seeds = {1, 2, 3};
    ExperimentResult live = run_experiment(fx.config);

    ExperimentResult loaded = load_result(fx.config);
    CHECK(loaded.records.size() == 3);
    CHECK(loaded.aggregate.f1.mean == live.aggregate.f1.mean);
    CHECK(loaded.aggregate.f1.stddev == live.aggregate.f1.stddev);
    CHECK(loaded.records[1].seed == live.records[1].seed);

    ExperimentResult live_copy = live;
    std::string a = render_results_csv({&live_copy, 1});
    std::string b = render_results_csv({&loaded, 1});
    CHECK(a == b);
}
