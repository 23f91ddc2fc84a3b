#pragma once

#include "mmrag/corpus.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mmrag {

/// Unit-norm dense vector. Components are IEEE doubles so cached and
/// freshly computed vectors compare bit-exact.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dims() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// In-place L2 normalization; throws ZeroVector when the norm is zero
/// and Error when any component is non-finite.
void l2_normalize(std::vector<double>& values);

/// Dot product of unit vectors, clamped to [-1, 1].
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Deterministic offline embedder: lowercase, split on non-alphanumeric
/// runs, FNV-1a 64-bit hash each token into one of `dims` buckets,
/// accumulate counts, L2-normalize. Bit-identical across platforms.
/// Not an approximation of any real retriever.
EmbeddingVector reference_embed(std::string_view text, std::size_t dims);

/// Sentence embedder behind the ranking pipeline. Implementations must be
/// safe to call from the single embedding pass (no concurrent calls).
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual const std::string& name() const = 0;
    virtual std::size_t dims() const = 0;
    /// One vector per input text, in input order, L2-normalized.
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

class ReferenceEmbedder final : public Embedder {
public:
    explicit ReferenceEmbedder(std::size_t dims);
    const std::string& name() const override { return name_; }
    std::size_t dims() const override { return dims_; }
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

private:
    std::string name_ = "reference";
    std::size_t dims_;
};

/// Training corpus plus one vector per example under a named embedder.
struct EmbeddedCorpus {
    std::shared_ptr<const Corpus> corpus;
    std::string embedder_name;
    std::vector<EmbeddingVector> vectors; // aligned with corpus->examples()
};

class EmbeddingCache;

/// Embeds every example, consulting `cache` when non-null (keyed by
/// embedder name, example id and content hash; edited text misses).
/// Embedder errors are rethrown with the offending example id attached.
EmbeddedCorpus embed_corpus(Embedder& embedder,
                            std::shared_ptr<const Corpus> corpus,
                            EmbeddingCache* cache = nullptr);

/// Hex SHA-256 of a text, the content-hash component of cache keys.
std::string sha256_hex(std::string_view text);

} // namespace mmrag
