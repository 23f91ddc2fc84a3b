#pragma once

#include "mmrag/embedding.hpp"
#include "mmrag/llm.hpp"

#include <string>

namespace mmrag {

/// OpenAI-compatible /v1/embeddings client. Vectors are re-normalized
/// locally so ranking is independent of server-side scaling conventions.
class RemoteEmbedder final : public Embedder {
public:
    RemoteEmbedder(std::string endpoint, std::string model, std::size_t dims,
                   std::size_t batch_size = 64, std::string api_key = {},
                   RetryPolicy retry = {});
    ~RemoteEmbedder() override;

    const std::string& name() const override { return model_; }
    std::size_t dims() const override { return dims_; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    std::string endpoint_;
    std::string model_;
    std::size_t dims_;
    std::size_t batch_size_;
    std::string api_key_;
    RetryPolicy retry_;
};

} // namespace mmrag
