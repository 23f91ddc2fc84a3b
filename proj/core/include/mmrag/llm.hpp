#pragma once

#include "mmrag/corpus.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

namespace mmrag {

struct GenerationParams {
    int max_tokens = 256;
    double temperature = 0.0; // deterministic decoding by default
    std::vector<std::string> stop_sequences;
};

struct Completion {
    std::string query_id;
    std::string raw_text; // byte-exact as returned; evaluation trims
    std::int64_t latency_ms = 0;
    std::string client_name;
};

/// Completion source. generate() must be safe to call concurrently from the
/// runner's bounded worker pool.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual const std::string& name() const = 0;
    virtual Completion generate(const Example& query, const std::string& prompt) = 0;
};

/// Offline stand-in declared in configs as
///   "mock:oracle"                     gold output for every query
///   "mock:corrupt:<seed>:<rate>"      gold, except a seeded subset of
///                                     exactly round(rate*n) queries that
///                                     get "INVALID_" + id
///   "mock:corrupt-scaled:<seed>:<r0>" corrupt with rate r0 / k, so the
///                                     error rate decays with shot count
///   "mock:fixed:<text>"               the same text for every query
struct MockSpec {
    enum class Kind { oracle, corrupt, corrupt_scaled, fixed };
    Kind kind = Kind::oracle;
    std::uint64_t seed = 0;
    double rate = 0.0;
    std::string text;

    static MockSpec parse(std::string_view spec);
    /// corrupt_scaled resolved against the run's demonstration count.
    MockSpec resolved(int k) const;
    std::string to_string() const;
};

/// Deterministic given (spec, run plan, query id); the corrupt subset is a
/// seeded Fisher-Yates prefix over the run-plan order.
class MockLlmClient final : public LlmClient {
public:
    MockLlmClient(MockSpec spec, const std::vector<std::string>& run_plan_ids);

    const std::string& name() const override { return name_; }
    Completion generate(const Example& query, const std::string& prompt) override;

    const std::unordered_set<std::string>& corrupt_ids() const { return corrupt_ids_; }

private:
    MockSpec spec_;
    std::string name_;
    std::unordered_set<std::string> corrupt_ids_;
};

struct RetryPolicy {
    int max_retries = 3;
    int backoff_initial_ms = 200;
};

/// OpenAI-compatible /v1/chat/completions client. Transient transport
/// failures (connection errors, 5xx) are retried with exponential backoff.
class RemoteLlmClient final : public LlmClient {
public:
    RemoteLlmClient(std::string endpoint, std::string model, GenerationParams params,
                    RetryPolicy retry = {}, std::string api_key = {});
    ~RemoteLlmClient() override;

    const std::string& name() const override { return model_; }
    Completion generate(const Example& query, const std::string& prompt) override;

private:
    std::string endpoint_;
    std::string model_;
    GenerationParams params_;
    RetryPolicy retry_;
    std::string api_key_;
};

/// Builds a client from a config spec string ("mock:..." or a remote model
/// name with endpoint). run_plan_ids is the ordered test-query id list.
std::unique_ptr<LlmClient> make_llm_client(const std::string& kind,
                                           const std::string& spec,
                                           const std::string& endpoint,
                                           const GenerationParams& params,
                                           const RetryPolicy& retry,
                                           const std::vector<std::string>& run_plan_ids,
                                           int k);

} // namespace mmrag
