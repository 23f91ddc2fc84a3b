#include "mmrag/embedding.hpp"

#include "mmrag/cache.hpp"
#include "mmrag/errors.hpp"
#include "mmrag/rng.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>

namespace mmrag {

void l2_normalize(std::vector<double>& values) {
    double sum_sq = 0.0;
    for (double v : values) {
        if (!std::isfinite(v))
            throw Error("embedding component is not finite");
        sum_sq += v * v;
    }
    if (sum_sq == 0.0)
        throw ZeroVector("cannot normalize a zero vector");
    const double norm = std::sqrt(sum_sq);
    for (double& v : values)
        v /= norm;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dims() != v.dims())
        throw DimensionMismatch(u.dims(), v.dims());
    double dot = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i)
        dot += u.values[i] * v.values[i];
    if (dot > 1.0) dot = 1.0;
    if (dot < -1.0) dot = -1.0;
    return dot;
}

namespace {

// Token chars: ASCII alphanumerics (A-Z lowered) and any byte >= 0x80,
// so UTF-8 sequences stay inside tokens. Locale-independent.
inline bool is_token_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
           (c >= 'A' && c <= 'Z') || c >= 0x80;
}

} // namespace

EmbeddingVector reference_embed(std::string_view text, std::size_t dims) {
    if (dims < 8)
        throw Error("reference embedder requires dims >= 8");

    std::vector<double> counts(dims, 0.0);
    bool any_token = false;
    std::string token;
    auto flush = [&] {
        if (token.empty())
            return;
        counts[fnv1a64(token) % dims] += 1.0;
        any_token = true;
        token.clear();
    };
    for (unsigned char c : text) {
        if (is_token_byte(c)) {
            if (c >= 'A' && c <= 'Z')
                c = static_cast<unsigned char>(c + 32);
            token.push_back(static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    if (!any_token)
        throw EmptyAfterTokenization("text has no tokens");

    l2_normalize(counts);
    return EmbeddingVector{std::move(counts)};
}

ReferenceEmbedder::ReferenceEmbedder(std::size_t dims) : dims_(dims) {
    if (dims < 8)
        throw Error("reference embedder requires dims >= 8");
}

std::vector<EmbeddingVector> ReferenceEmbedder::embed(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts)
        out.push_back(reference_embed(text, dims_));
    return out;
}

std::string sha256_hex(std::string_view text) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int digest_len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &digest_len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    std::string hex(digest_len * 2, '\0');
    for (unsigned int i = 0; i < digest_len; ++i)
        std::snprintf(hex.data() + 2 * i, 3, "%02x", digest[i]);
    return hex;
}

EmbeddedCorpus embed_corpus(Embedder& embedder,
                            std::shared_ptr<const Corpus> corpus,
                            EmbeddingCache* cache) {
    const auto& examples = corpus->examples();
    std::vector<EmbeddingVector> vectors(examples.size());

    std::vector<std::size_t> miss_indices;
    std::vector<std::string> miss_texts;
    std::vector<std::string> miss_hashes;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        std::string hash = sha256_hex(examples[i].text);
        if (cache) {
            if (auto hit = cache->lookup(embedder.name(), examples[i].id, hash)) {
                vectors[i] = std::move(*hit);
                continue;
            }
        }
        miss_indices.push_back(i);
        miss_texts.push_back(examples[i].text);
        miss_hashes.push_back(std::move(hash));
    }

    if (!miss_indices.empty()) {
        std::vector<EmbeddingVector> fresh;
        try {
            fresh = embedder.embed(miss_texts);
        } catch (const Error& batch_error) {
            // Locate the offending example so the error names it.
            for (std::size_t m = 0; m < miss_texts.size(); ++m) {
                try {
                    (void)embedder.embed(std::span<const std::string>(&miss_texts[m], 1));
                } catch (const Error& e) {
                    throw Error("embedding failed for example \"" +
                                examples[miss_indices[m]].id + "\": " + e.what());
                }
            }
            throw Error(std::string("embedding failed: ") + batch_error.what());
        }
        if (fresh.size() != miss_texts.size())
            throw MalformedResponse("embedder returned " + std::to_string(fresh.size()) +
                                    " vectors for " + std::to_string(miss_texts.size()) + " texts");
        for (std::size_t m = 0; m < miss_indices.size(); ++m) {
            if (fresh[m].dims() != embedder.dims())
                throw DimensionMismatch(embedder.dims(), fresh[m].dims());
            if (cache)
                cache->store(embedder.name(), examples[miss_indices[m]].id,
                             miss_hashes[m], fresh[m]);
            vectors[miss_indices[m]] = std::move(fresh[m]);
        }
    }

    return EmbeddedCorpus{std::move(corpus), embedder.name(), std::move(vectors)};
}

} // namespace mmrag
