#include "mmrag/remote.hpp"

#include "mmrag/errors.hpp"
#include "mmrag/llm.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include <chrono>
#include <thread>

namespace mmrag {

namespace {

using nlohmann::json;

httplib::Headers auth_headers(const std::string& api_key) {
    httplib::Headers headers;
    if (!api_key.empty())
        headers.emplace("Authorization", "Bearer " + api_key);
    return headers;
}

/// POSTs JSON with retries on connection failures and 5xx responses.
httplib::Response post_with_retries(const std::string& endpoint, const std::string& path,
                                    const std::string& body, const std::string& api_key,
                                    const RetryPolicy& retry) {
    std::string last_failure;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(retry.backoff_initial_ms) * (1 << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(endpoint);
        client.set_read_timeout(300, 0);
        client.set_connection_timeout(10, 0);
        auto result = client.Post(path, auth_headers(api_key), body, "application/json");
        if (!result) {
            last_failure = "connection failed: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 500) {
            last_failure = "server returned HTTP " + std::to_string(result->status);
            continue;
        }
        return *result;
    }
    throw TransportError("POST " + endpoint + path + " failed after " +
                         std::to_string(retry.max_retries + 1) + " attempts; last: " +
                         last_failure);
}

json parse_body(const httplib::Response& response, const std::string& context) {
    try {
        return json::parse(response.body);
    } catch (const json::exception& e) {
        throw MalformedResponse(context + ": response is not valid JSON: " + e.what());
    }
}

} // namespace

// --- RemoteEmbedder ---

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::string model, std::size_t dims,
                               std::size_t batch_size, std::string api_key, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), dims_(dims),
      batch_size_(batch_size == 0 ? 1 : batch_size), api_key_(std::move(api_key)),
      retry_(retry) {}

RemoteEmbedder::~RemoteEmbedder() = default;

std::vector<EmbeddingVector> RemoteEmbedder::embed(std::span<const std::string> texts) {
    if (texts.empty())
        throw Error("remote embedding requires a non-empty batch");

    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        const std::size_t count = std::min(batch_size_, texts.size() - start);

        json body;
        body["model"] = model_;
        body["input"] = json::array();
        for (std::size_t i = 0; i < count; ++i)
            body["input"].push_back(texts[start + i]);

        auto response =
            post_with_retries(endpoint_, "/v1/embeddings", body.dump(), api_key_, retry_);
        if (response.status < 200 || response.status >= 300)
            throw TransportError("embeddings endpoint returned HTTP " +
                                 std::to_string(response.status));

        json parsed = parse_body(response, "embeddings");
        if (!parsed.contains("data") || !parsed["data"].is_array())
            throw MalformedResponse("embeddings: missing \"data\" array");
        const json& data = parsed["data"];
        if (data.size() != count)
            throw MalformedResponse("embeddings: got " + std::to_string(data.size()) +
                                    " vectors for " + std::to_string(count) + " inputs");
        for (const json& item : data) {
            if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array())
                throw MalformedResponse("embeddings: entry without \"embedding\" array");
            EmbeddingVector vec;
            vec.values.reserve(item["embedding"].size());
            for (const json& v : item["embedding"]) {
                if (!v.is_number())
                    throw MalformedResponse("embeddings: non-numeric component");
                vec.values.push_back(v.get<double>());
            }
            if (vec.dims() != dims_)
                throw DimensionMismatch(dims_, vec.dims());
            l2_normalize(vec.values);
            out.push_back(std::move(vec));
        }
    }
    return out;
}

// --- RemoteLlmClient ---

RemoteLlmClient::RemoteLlmClient(std::string endpoint, std::string model,
                                 GenerationParams params, RetryPolicy retry,
                                 std::string api_key)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), params_(std::move(params)),
      retry_(retry), api_key_(std::move(api_key)) {}

RemoteLlmClient::~RemoteLlmClient() = default;

Completion RemoteLlmClient::generate(const Example& query, const std::string& prompt) {
    json body;
    body["model"] = model_;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = params_.temperature;
    body["max_tokens"] = params_.max_tokens;
    if (!params_.stop_sequences.empty())
        body["stop"] = params_.stop_sequences;

    const auto started = std::chrono::steady_clock::now();
    auto response =
        post_with_retries(endpoint_, "/v1/chat/completions", body.dump(), api_key_, retry_);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (response.status < 200 || response.status >= 300) {
        // Context overflow is surfaced as a distinct error so the runner can
        // record the query as failed rather than retrying.
        json parsed;
        try {
            parsed = json::parse(response.body);
        } catch (const json::exception&) {
            parsed = json::object();
        }
        if (parsed.contains("error") && parsed["error"].is_object() &&
            parsed["error"].value("code", "") == "context_length_exceeded")
            throw ContextLengthExceeded("query \"" + query.id + "\": prompt exceeds model context");
        throw TransportError("chat endpoint returned HTTP " + std::to_string(response.status));
    }

    json parsed = parse_body(response, "chat");
    if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty())
        throw MalformedResponse("chat: missing or empty \"choices\"");
    const json& first = parsed["choices"][0];
    if (!first.is_object() || !first.contains("message") || !first["message"].is_object() ||
        !first["message"].contains("content") || !first["message"]["content"].is_string())
        throw MalformedResponse("chat: choices[0].message.content missing");

    Completion out;
    out.query_id = query.id;
    out.raw_text = first["message"]["content"].get<std::string>();
    out.latency_ms = elapsed.count();
    out.client_name = model_;
    return out;
}

} // namespace mmrag
