#include "mmrag/llm.hpp"

#include "mmrag/errors.hpp"
#include "mmrag/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mmrag {

namespace {

std::string format_rate(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", rate);
    return buf;
}

} // namespace

MockSpec MockSpec::parse(std::string_view spec) {
    auto fail = [&] { throw Error("invalid mock spec \"" + std::string(spec) + "\""); };
    if (spec.substr(0, 5) != "mock:")
        fail();
    std::string_view rest = spec.substr(5);

    MockSpec out;
    if (rest == "oracle") {
        out.kind = Kind::oracle;
        return out;
    }
    if (rest.substr(0, 6) == "fixed:") {
        out.kind = Kind::fixed;
        out.text = std::string(rest.substr(6));
        return out;
    }

    std::string_view tag;
    if (rest.substr(0, 8) == "corrupt:") {
        out.kind = Kind::corrupt;
        tag = rest.substr(8);
    } else if (rest.substr(0, 15) == "corrupt-scaled:") {
        out.kind = Kind::corrupt_scaled;
        tag = rest.substr(15);
    } else {
        fail();
    }

    auto colon = tag.find(':');
    if (colon == std::string_view::npos)
        fail();
    try {
        std::size_t used = 0;
        out.seed = std::stoull(std::string(tag.substr(0, colon)), &used);
        if (used != colon)
            fail();
        out.rate = std::stod(std::string(tag.substr(colon + 1)), &used);
        if (used != tag.size() - colon - 1)
            fail();
    } catch (const std::logic_error&) {
        fail();
    }
    if (!(out.rate >= 0.0 && out.rate <= 1.0))
        throw Error("mock corrupt rate must be in [0, 1], got " + format_rate(out.rate));
    return out;
}

MockSpec MockSpec::resolved(int k) const {
    if (kind != Kind::corrupt_scaled)
        return *this;
    MockSpec out = *this;
    out.kind = Kind::corrupt;
    out.rate = rate / static_cast<double>(std::max(1, k));
    return out;
}

std::string MockSpec::to_string() const {
    switch (kind) {
    case Kind::oracle: return "mock:oracle";
    case Kind::corrupt:
        return "mock:corrupt:" + std::to_string(seed) + ":" + format_rate(rate);
    case Kind::corrupt_scaled:
        return "mock:corrupt-scaled:" + std::to_string(seed) + ":" + format_rate(rate);
    case Kind::fixed: return "mock:fixed:" + text;
    }
    return "mock:?";
}

MockLlmClient::MockLlmClient(MockSpec spec, const std::vector<std::string>& run_plan_ids)
    : spec_(std::move(spec)), name_(spec_.to_string()) {
    if (spec_.kind == MockSpec::Kind::corrupt_scaled)
        throw Error("corrupt-scaled mock must be resolved against k before use");
    if (spec_.kind == MockSpec::Kind::corrupt) {
        const std::size_t n = run_plan_ids.size();
        const auto m = static_cast<std::size_t>(std::llround(spec_.rate * static_cast<double>(n)));
        for (std::size_t idx : sample_prefix(n, m, spec_.seed))
            corrupt_ids_.insert(run_plan_ids[idx]);
    }
}

Completion MockLlmClient::generate(const Example& query, const std::string&) {
    Completion out;
    out.query_id = query.id;
    out.client_name = name_;
    switch (spec_.kind) {
    case MockSpec::Kind::oracle:
        out.raw_text = query.gold;
        break;
    case MockSpec::Kind::corrupt:
        out.raw_text = corrupt_ids_.contains(query.id) ? "INVALID_" + query.id : query.gold;
        break;
    case MockSpec::Kind::fixed:
        out.raw_text = spec_.text;
        break;
    case MockSpec::Kind::corrupt_scaled:
        throw Error("unreachable: unresolved corrupt-scaled mock");
    }
    return out;
}

std::unique_ptr<LlmClient> make_llm_client(const std::string& kind,
                                           const std::string& spec,
                                           const std::string& endpoint,
                                           const GenerationParams& params,
                                           const RetryPolicy& retry,
                                           const std::vector<std::string>& run_plan_ids,
                                           int k) {
    if (kind == "mock")
        return std::make_unique<MockLlmClient>(MockSpec::parse(spec).resolved(k), run_plan_ids);
    if (kind == "remote") {
        const char* key = std::getenv("MMRAG_LLM_API_KEY");
        return std::make_unique<RemoteLlmClient>(endpoint, spec, params, retry,
                                                 key ? key : "");
    }
    throw Error("unknown llm kind \"" + kind + "\"");
}

} // namespace mmrag
