#include "mmrag/config.hpp"
#include "mmrag/errors.hpp"

#include "support/fixtures.hpp"

#include "doctest.h"

#include <set>

using namespace mmrag;
using namespace testsupport;

namespace {

struct ConfigText {
    std::string task = "kind = \"tc\"\noutput_format = \"single_label\"\n"
                       "labels = [\"strong advice\", \"weak advice\", \"no advice\"]\n"
                       "instruction = \"Classify the sentence.\"\n";
    std::string data = "dataset = \"healthadvice\"\ntrain = \"train.jsonl\"\ntest = \"test.jsonl\"\n";
    std::string embedder = "kind = \"reference\"\ndims = 64\ncache = \"vectors.jsonl\"\n";
    std::string llm = "kind = \"mock\"\nspec = \"mock:oracle\"\n";
    std::string selection = "mode = \"top\"\nk = 3\n";
    std::string run = "repeats = 1\nmax_inflight = 4\noutput_dir = \"out\"\n";
    std::string sweep;

    std::string str() const {
        std::string out = "# experiment\n[task]\n" + task + "\n[data]\n" + data +
                          "\n[embedder]\n" + embedder + "\n[llm]\n" + llm + "\n[selection]\n" +
                          selection + "\n[run]\n" + run;
        if (!sweep.empty())
            out += "\n[sweep]\n" + sweep;
        return out;
    }
};

ExperimentConfig load_text(const TempDir& dir, const std::string& body,
                           const std::string& name = "exp.toml") {
    write_file(dir.path / name, body);
    return load_config(dir.path / name);
}

void expect_field(const TempDir& dir, const std::string& body, const std::string& field) {
    write_file(dir.path / "bad.toml", body);
    try {
        (void)load_config(dir.path / "bad.toml");
        FAIL_CHECK("expected ConfigInvalid at ", field);
    } catch (const ConfigInvalid& e) {
        CHECK(e.field_path == field);
    }
}

} // namespace

TEST_CASE("load_config parses a full file and applies defaults") {
    TempDir dir("config");
    ExperimentConfig cfg = load_text(dir, ConfigText{}.str());

    CHECK(cfg.task.kind == TaskKind::tc);
    CHECK(cfg.task.label_set.size() == 3);
    CHECK(cfg.task.instruction == "Classify the sentence.");
    CHECK(cfg.dataset == "healthadvice");
    CHECK(cfg.embedder.dims == 64);
    CHECK(cfg.embedder.cache == "vectors.jsonl");
    CHECK(cfg.llm.spec == "mock:oracle");
    CHECK(cfg.selection.mode == SelectionMode::top);
    CHECK(cfg.selection.k == 3);
    CHECK(cfg.selection.gap == 1);           // default
    CHECK(cfg.run.max_inflight == 4);
    CHECK(cfg.llm.params.max_tokens == 256); // default
    CHECK(cfg.llm.retry.max_retries == 3);   // default
    CHECK(cfg.base_dir == dir.path);
    CHECK(cfg.resolve_path(cfg.train_path) == dir.path / "train.jsonl");
    CHECK(cfg.sweep.empty());
}

TEST_CASE("config validation failures name the field") {
    TempDir dir("configbad");

    SUBCASE("missing file names the path") {
        try {
            (void)load_config(dir.path / "missing.toml");
            FAIL("expected ConfigInvalid");
        } catch (const ConfigInvalid& e) {
            CHECK(std::string(e.what()).find("missing.toml") != std::string::npos);
        }
    }

    SUBCASE("random mode without seeds") {
        ConfigText text;
        text.selection = "mode = \"random\"\nk = 3\n";
        expect_field(dir, text.str(), "run.seeds");
    }

    SUBCASE("seed count must equal repeats") {
        ConfigText text;
        text.selection = "mode = \"random\"\nk = 3\n";
        text.run = "repeats = 3\nseeds = [1, 2]\noutput_dir = \"out\"\n";
        expect_field(dir, text.str(), "run.seeds");
    }

    SUBCASE("class mode forbids NER") {
        ConfigText text;
        text.task = "kind = \"ner\"\noutput_format = \"entity_list\"\nlabels = []\n";
        text.selection = "mode = \"class\"\nk = 3\n";
        expect_field(dir, text.str(), "selection.mode");
    }

    SUBCASE("gap must be at least 1") {
        ConfigText text;
        text.selection = "mode = \"diversity\"\nk = 3\ngap = 0\n";
        expect_field(dir, text.str(), "selection.gap");
    }

    SUBCASE("k must be positive") {
        ConfigText text;
        text.selection = "mode = \"top\"\nk = 0\n";
        expect_field(dir, text.str(), "selection.k");
    }

    SUBCASE("unknown keys are rejected") {
        expect_field(dir, ConfigText{}.str() + "typo_key = 1\n", "run.typo_key");
    }

    SUBCASE("remote llm requires an endpoint") {
        ConfigText text;
        text.llm = "kind = \"remote\"\nspec = \"some-model\"\n";
        expect_field(dir, text.str(), "llm.endpoint");
    }

    SUBCASE("bad mock spec") {
        ConfigText text;
        text.llm = "kind = \"mock\"\nspec = \"mock:nope\"\n";
        expect_field(dir, text.str(), "llm.spec");
    }

    SUBCASE("dims lower bound") {
        ConfigText text;
        text.embedder = "kind = \"reference\"\ndims = 4\n";
        expect_field(dir, text.str(), "embedder.dims");
    }

    SUBCASE("labels are required for tc") {
        ConfigText text;
        text.task = "kind = \"tc\"\noutput_format = \"single_label\"\nlabels = []\n";
        expect_field(dir, text.str(), "task.labels");
    }
}

TEST_CASE("resolved dump is canonical and idempotent") {
    TempDir dir("configres");
    ExperimentConfig cfg = load_text(dir, ConfigText{}.str());

    std::string once = cfg.resolved(1);
    CHECK(once == cfg.resolved(1));
    CHECK(once.find("max_tokens = 256") != std::string::npos); // default made explicit
    CHECK(once.find("seed_derivation") != std::string::npos);
    CHECK(once.find("repeats_requested = 1") != std::string::npos);

    // The dump itself parses back to an identical config (schema closure).
    ExperimentConfig reparsed = load_text(dir, once, "resolved.toml");
    CHECK(reparsed.resolved(1) == once);
}

TEST_CASE("config_schema lists every default") {
    std::string schema = config_schema();
    for (const char* key :
         {"[task]", "[data]", "[embedder]", "[llm]", "[selection]", "[run]", "dims",
          "temperature", "max_inflight", "batch_size", "order", "backoff_ms", "max_retries"})
        CHECK(schema.find(key) != std::string::npos);
}

TEST_CASE("sweep expansion is the full cartesian product") {
    TempDir dir("sweep");
    ConfigText text;
    text.sweep = "modes = [\"top\", \"diversity\"]\nks = [1, 5, 10]\ngaps = [1, 2, 3]\n"
                 "retrievers = [\"reference:32\", \"reference:64\"]\n"
                 "llms = [\"mock:oracle\", \"mock:corrupt:1:0.5\"]\n";
    ExperimentConfig cfg = load_text(dir, text.str());
    auto cells = expand_sweep(cfg);
    CHECK(cells.size() == 2 * 3 * 3 * 2 * 2);

    std::set<std::string> dirs;
    for (const auto& cell : cells) {
        CHECK(cell.run.output_dir.rfind("out/", 0) == 0);
        CHECK(dirs.insert(cell.run.output_dir).second); // distinct cell dirs
        CHECK(cell.sweep.empty());
        cell.validate();
    }
}

TEST_CASE("sweep expansion falls back to base singletons") {
    TempDir dir("sweep1");
    auto single = expand_sweep(load_text(dir, ConfigText{}.str()));
    REQUIRE(single.size() == 1);
    CHECK(single[0].selection.mode == SelectionMode::top);
    CHECK(single[0].selection.k == 3);
    CHECK(single[0].embedder.dims == 64);
}

TEST_CASE("minitoml rejects bad grammar") {
    TempDir dir("toml");
    for (const char* bad : {"key\n", "key = \n", "[unterminated\n", "key = [1, \n",
                            "key = \"unterminated\n", "a = 1\na = 2\n", "k = 1 trailing\n"}) {
        write_file(dir.path / "bad.toml", bad);
        CHECK_THROWS_AS((void)load_config(dir.path / "bad.toml"), ConfigInvalid);
    }
}

TEST_CASE("minitoml accepts comments, escapes and arrays") {
    TempDir dir("tomlok");
    ConfigText text;
    text.task = "kind = \"tc\"  # trailing comment\noutput_format = \"single_label\"\n"
                "labels = [\"a\\\"b\", \"tab\\there\"]\ninstruction = \"\"\n";
    text.llm = "kind = \"mock\"\nspec = \"mock:fixed:a\\\"b\"\nstop = [\"x\", \"y\"]\n"
               "temperature = 0.5\n";
    ExperimentConfig cfg = load_text(dir, text.str());
    CHECK(cfg.task.label_set[0] == "a\"b");
    CHECK(cfg.task.label_set[1] == "tab\there");
    CHECK(cfg.llm.params.stop_sequences == std::vector<std::string>{"x", "y"});
    CHECK(cfg.llm.params.temperature == 0.5);
}
