#include "mmrag/config.hpp"

#include "mmrag/errors.hpp"
#include "mmrag/version.hpp"

#include "minitoml.hpp"

#include <cstdio>
#include <set>
#include <sstream>

namespace mmrag {

namespace {

using minitoml::Table;
using minitoml::Value;

struct Reader {
    const Table& table;
    std::set<std::string> used;

    const Value* find(const std::string& key) {
        auto it = table.find(key);
        if (it == table.end())
            return nullptr;
        used.insert(key);
        return &it->second;
    }

    std::string get_string(const std::string& key, std::string fallback) {
        const Value* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_string())
            throw ConfigInvalid(key, "expected a string");
        return std::get<std::string>(v->data);
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) {
        const Value* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_int())
            throw ConfigInvalid(key, "expected an integer");
        return std::get<std::int64_t>(v->data);
    }

    double get_float(const std::string& key, double fallback) {
        const Value* v = find(key);
        if (!v)
            return fallback;
        if (v->is_int())
            return static_cast<double>(std::get<std::int64_t>(v->data));
        if (!v->is_float())
            throw ConfigInvalid(key, "expected a number");
        return std::get<double>(v->data);
    }

    std::vector<std::string> get_string_list(const std::string& key) {
        const Value* v = find(key);
        std::vector<std::string> out;
        if (!v)
            return out;
        if (!v->is_array())
            throw ConfigInvalid(key, "expected an array of strings");
        for (const Value& item : std::get<minitoml::Array>(v->data)) {
            if (!item.is_string())
                throw ConfigInvalid(key, "expected an array of strings");
            out.push_back(std::get<std::string>(item.data));
        }
        return out;
    }

    std::vector<std::int64_t> get_int_list(const std::string& key) {
        const Value* v = find(key);
        std::vector<std::int64_t> out;
        if (!v)
            return out;
        if (!v->is_array())
            throw ConfigInvalid(key, "expected an array of integers");
        for (const Value& item : std::get<minitoml::Array>(v->data)) {
            if (!item.is_int())
                throw ConfigInvalid(key, "expected an array of integers");
            out.push_back(std::get<std::int64_t>(item.data));
        }
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, value] : table)
            if (!used.count(key))
                throw ConfigInvalid(key, "unknown key");
    }
};

std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void append_string_list(std::string& out, const std::vector<std::string>& items) {
    out += "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += minitoml::quote(items[i]);
    }
    out += "]";
}

DemoOrder demo_order_from_string(const std::string& s) {
    if (s == "similar_first") return DemoOrder::similar_first;
    if (s == "similar_last") return DemoOrder::similar_last;
    throw ConfigInvalid("selection.order",
                        "expected \"similar_first\" or \"similar_last\", got \"" + s + "\"");
}

std::string to_string(DemoOrder order) {
    return order == DemoOrder::similar_first ? "similar_first" : "similar_last";
}

} // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw ConfigInvalid(path.string(), "config file does not exist");
    Table table = minitoml::parse_file(path.string());
    Reader r{table, {}};

    ExperimentConfig cfg;
    cfg.base_dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    cfg.task.kind = task_kind_from_string(r.get_string("task.kind", "tc"));
    cfg.task.output_format =
        output_format_from_string(r.get_string("task.output_format", "single_label"));
    cfg.task.label_set = r.get_string_list("task.labels");
    cfg.task.instruction = r.get_string("task.instruction", "");

    cfg.dataset = r.get_string("data.dataset", "dataset");
    cfg.train_path = r.get_string("data.train", "");
    cfg.test_path = r.get_string("data.test", "");

    cfg.embedder.kind = r.get_string("embedder.kind", "reference");
    cfg.embedder.name =
        r.get_string("embedder.name", cfg.embedder.kind == "reference" ? "reference" : "");
    cfg.embedder.query_name = r.get_string("embedder.query_name", "");
    cfg.embedder.dims = static_cast<std::size_t>(r.get_int("embedder.dims", 64));
    cfg.embedder.endpoint = r.get_string("embedder.endpoint", "");
    cfg.embedder.batch_size = static_cast<std::size_t>(r.get_int("embedder.batch_size", 64));
    cfg.embedder.cache = r.get_string("embedder.cache", "");

    cfg.llm.kind = r.get_string("llm.kind", "mock");
    cfg.llm.spec = r.get_string("llm.spec", "mock:oracle");
    cfg.llm.endpoint = r.get_string("llm.endpoint", "");
    cfg.llm.params.max_tokens = static_cast<int>(r.get_int("llm.max_tokens", 256));
    cfg.llm.params.temperature = r.get_float("llm.temperature", 0.0);
    cfg.llm.params.stop_sequences = r.get_string_list("llm.stop");
    cfg.llm.retry.max_retries = static_cast<int>(r.get_int("llm.max_retries", 3));
    cfg.llm.retry.backoff_initial_ms = static_cast<int>(r.get_int("llm.backoff_ms", 200));

    cfg.selection.mode = selection_mode_from_string(r.get_string("selection.mode", "top"));
    cfg.selection.k = static_cast<int>(r.get_int("selection.k", 1));
    cfg.selection.gap = static_cast<int>(r.get_int("selection.gap", 1));
    cfg.selection.order = demo_order_from_string(r.get_string("selection.order", "similar_first"));

    cfg.run.repeats = static_cast<int>(r.get_int("run.repeats", 1));
    for (std::int64_t s : r.get_int_list("run.seeds"))
        cfg.run.seeds.push_back(static_cast<std::uint64_t>(s));
    cfg.run.max_inflight = static_cast<int>(r.get_int("run.max_inflight", 1));
    cfg.run.output_dir = r.get_string("run.output_dir", "out");
    // informational keys echoed by resolved dumps
    (void)r.find("run.repeats_requested");
    (void)r.find("run.seed_derivation");

    cfg.sweep.modes = r.get_string_list("sweep.modes");
    for (std::int64_t k : r.get_int_list("sweep.ks"))
        cfg.sweep.ks.push_back(static_cast<int>(k));
    for (std::int64_t g : r.get_int_list("sweep.gaps"))
        cfg.sweep.gaps.push_back(static_cast<int>(g));
    cfg.sweep.retrievers = r.get_string_list("sweep.retrievers");
    cfg.sweep.llms = r.get_string_list("sweep.llms");

    r.reject_unknown();
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    try {
        task.validate();
    } catch (const InvalidTaskSpec& e) {
        throw ConfigInvalid("task.labels", e.what());
    }
    if (train_path.empty())
        throw ConfigInvalid("data.train", "training corpus path is required");
    if (test_path.empty())
        throw ConfigInvalid("data.test", "test corpus path is required");

    if (embedder.kind != "reference" && embedder.kind != "remote")
        throw ConfigInvalid("embedder.kind", "expected \"reference\" or \"remote\"");
    if (embedder.dims < 8)
        throw ConfigInvalid("embedder.dims", "dims must be >= 8");
    if (embedder.kind == "remote") {
        if (embedder.endpoint.empty())
            throw ConfigInvalid("embedder.endpoint", "remote embedder requires an endpoint");
        if (embedder.name.empty())
            throw ConfigInvalid("embedder.name", "remote embedder requires a model name");
    }

    if (llm.kind == "mock") {
        try {
            (void)MockSpec::parse(llm.spec);
        } catch (const Error& e) {
            throw ConfigInvalid("llm.spec", e.what());
        }
    } else if (llm.kind == "remote") {
        if (llm.endpoint.empty())
            throw ConfigInvalid("llm.endpoint", "remote llm requires an endpoint");
        if (llm.spec.empty())
            throw ConfigInvalid("llm.spec", "remote llm requires a model name");
    } else {
        throw ConfigInvalid("llm.kind", "expected \"mock\" or \"remote\"");
    }
    if (llm.params.max_tokens < 1)
        throw ConfigInvalid("llm.max_tokens", "must be positive");
    if (llm.params.temperature < 0.0)
        throw ConfigInvalid("llm.temperature", "must be non-negative");
    if (llm.retry.max_retries < 0)
        throw ConfigInvalid("llm.max_retries", "must be non-negative");

    if (selection.k < 1)
        throw ConfigInvalid("selection.k", "k must be positive");
    if (selection.gap < 1)
        throw ConfigInvalid("selection.gap", "gap must be >= 1");
    if (selection.mode == SelectionMode::per_class) {
        if (task.kind == TaskKind::ner)
            throw ConfigInvalid("selection.mode", "Class Mode is not defined for NER tasks");
        if (task.label_set.empty())
            throw ConfigInvalid("selection.mode", "Class Mode requires task.labels");
    }

    if (run.repeats < 1)
        throw ConfigInvalid("run.repeats", "must be positive");
    if (selection.mode == SelectionMode::random &&
        run.seeds.size() != static_cast<std::size_t>(run.repeats))
        throw ConfigInvalid("run.seeds", "Random Mode needs exactly one seed per repeat (" +
                                             std::to_string(run.repeats) + " repeats, " +
                                             std::to_string(run.seeds.size()) + " seeds)");
    if (run.max_inflight < 1)
        throw ConfigInvalid("run.max_inflight", "must be positive");
    if (run.output_dir.empty())
        throw ConfigInvalid("run.output_dir", "output directory is required");
}

std::filesystem::path ExperimentConfig::resolve_path(const std::string& p) const {
    std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty())
        return path;
    return base_dir / path;
}

std::string ExperimentConfig::resolved(int repeats_effective) const {
    std::string out;
    out += "# mmrag ";
    out += version_string;
    out += " resolved configuration\n\n[task]\nkind = \"";
    out += to_string(task.kind);
    out += "\"\noutput_format = \"";
    out += to_string(task.output_format);
    out += "\"\nlabels = ";
    append_string_list(out, task.label_set);
    out += "\ninstruction = " + minitoml::quote(task.instruction);
    out += "\n\n[data]\ndataset = " + minitoml::quote(dataset);
    out += "\ntrain = " + minitoml::quote(train_path);
    out += "\ntest = " + minitoml::quote(test_path);
    out += "\n\n[embedder]\nkind = " + minitoml::quote(embedder.kind);
    out += "\nname = " + minitoml::quote(embedder.name);
    out += "\nquery_name = " + minitoml::quote(embedder.query_name);
    out += "\ndims = " + std::to_string(embedder.dims);
    out += "\nendpoint = " + minitoml::quote(embedder.endpoint);
    out += "\nbatch_size = " + std::to_string(embedder.batch_size);
    out += "\ncache = " + minitoml::quote(embedder.cache);
    out += "\n\n[llm]\nkind = " + minitoml::quote(llm.kind);
    out += "\nspec = " + minitoml::quote(llm.spec);
    out += "\nendpoint = " + minitoml::quote(llm.endpoint);
    out += "\nmax_tokens = " + std::to_string(llm.params.max_tokens);
    out += "\ntemperature = " + format_float(llm.params.temperature);
    out += "\nstop = ";
    append_string_list(out, llm.params.stop_sequences);
    out += "\nmax_retries = " + std::to_string(llm.retry.max_retries);
    out += "\nbackoff_ms = " + std::to_string(llm.retry.backoff_initial_ms);
    out += "\n\n[selection]\nmode = " + minitoml::quote(to_string(selection.mode));
    out += "\nk = " + std::to_string(selection.k);
    out += "\ngap = " + std::to_string(selection.gap);
    out += "\norder = " + minitoml::quote(to_string(selection.order));
    out += "\n\n[run]\nrepeats = " + std::to_string(repeats_effective);
    out += "\nrepeats_requested = " + std::to_string(run.repeats);
    out += "\nseeds = [";
    for (std::size_t i = 0; i < run.seeds.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(run.seeds[i]);
    }
    out += "]";
    out += "\nmax_inflight = " + std::to_string(run.max_inflight);
    out += "\noutput_dir = " + minitoml::quote(run.output_dir);
    out += "\nseed_derivation = \"run_seed xor fnv1a64(query_id)\"";
    out += "\n";

    if (!sweep.empty()) {
        out += "\n[sweep]\nmodes = ";
        append_string_list(out, sweep.modes);
        out += "\nks = [";
        for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(sweep.ks[i]);
        }
        out += "]\ngaps = [";
        for (std::size_t i = 0; i < sweep.gaps.size(); ++i) {
            if (i) out += ", ";
            out += std::to_string(sweep.gaps[i]);
        }
        out += "]\nretrievers = ";
        append_string_list(out, sweep.retrievers);
        out += "\nllms = ";
        append_string_list(out, sweep.llms);
        out += "\n";
    }
    return out;
}

std::string config_schema() {
    ExperimentConfig cfg;
    cfg.train_path = "train.jsonl";
    cfg.test_path = "test.jsonl";
    return cfg.resolved(cfg.run.repeats);
}

namespace {

EmbedderConfig parse_retriever_spec(const std::string& spec, const EmbedderConfig& base) {
    EmbedderConfig out = base;
    if (spec.rfind("reference:", 0) == 0) {
        out.kind = "reference";
        out.name = "reference";
        out.query_name.clear();
        out.dims = static_cast<std::size_t>(std::stoull(spec.substr(10)));
        return out;
    }
    if (spec.rfind("remote:", 0) == 0) {
        auto rest = spec.substr(7);
        auto colon = rest.rfind(':');
        if (colon == std::string::npos)
            throw ConfigInvalid("sweep.retrievers",
                                "expected \"remote:<model>:<dims>\", got \"" + spec + "\"");
        out.kind = "remote";
        out.name = rest.substr(0, colon);
        out.dims = static_cast<std::size_t>(std::stoull(rest.substr(colon + 1)));
        return out;
    }
    throw ConfigInvalid("sweep.retrievers", "unknown retriever spec \"" + spec + "\"");
}

std::string sanitize_for_path(std::string s) {
    for (char& c : s)
        if (c == ':' || c == '/' || c == '\\' || c == ' ')
            c = '_';
    return s;
}

} // namespace

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& base) {
    const SweepConfig& sweep = base.sweep;
    std::vector<std::string> modes =
        sweep.modes.empty() ? std::vector<std::string>{to_string(base.selection.mode)}
                            : sweep.modes;
    std::vector<int> ks = sweep.ks.empty() ? std::vector<int>{base.selection.k} : sweep.ks;
    std::vector<int> gaps = sweep.gaps.empty() ? std::vector<int>{base.selection.gap} : sweep.gaps;
    std::vector<std::string> retrievers = sweep.retrievers;
    if (retrievers.empty())
        retrievers.push_back(base.embedder.kind == "reference"
                                 ? "reference:" + std::to_string(base.embedder.dims)
                                 : "remote:" + base.embedder.name + ":" +
                                       std::to_string(base.embedder.dims));
    std::vector<std::string> llms =
        sweep.llms.empty() ? std::vector<std::string>{base.llm.spec} : sweep.llms;

    std::vector<ExperimentConfig> cells;
    for (const auto& mode : modes)
        for (int k : ks)
            for (int gap : gaps)
                for (const auto& retriever : retrievers)
                    for (const auto& llm_spec : llms) {
                        ExperimentConfig cell = base;
                        cell.sweep = SweepConfig{};
                        cell.selection.mode = selection_mode_from_string(mode);
                        cell.selection.k = k;
                        cell.selection.gap = gap;
                        cell.embedder = parse_retriever_spec(retriever, base.embedder);
                        cell.llm.spec = llm_spec;
                        cell.llm.kind = llm_spec.rfind("mock:", 0) == 0 ? "mock" : "remote";
                        cell.run.output_dir =
                            base.run.output_dir + "/cell_" + sanitize_for_path(mode) + "_k" +
                            std::to_string(k) + "_g" + std::to_string(gap) + "_" +
                            sanitize_for_path(retriever) + "_" + sanitize_for_path(llm_spec);
                        cells.push_back(std::move(cell));
                    }
    return cells;
}

} // namespace mmrag
