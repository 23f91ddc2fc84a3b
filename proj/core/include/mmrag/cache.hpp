#pragma once

#include "mmrag/embedding.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

namespace mmrag {

/// Append-only JSONL vector cache, keyed by (embedder name, example id,
/// hex SHA-256 of the text). Vector components round-trip bit-exact, so a
/// cache hit is indistinguishable from recomputation.
///
/// A corrupt trailing line (torn append) is truncated with a warning;
/// corruption anywhere else is an error. Writes are serialized; lookups
/// may run from any thread.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::filesystem::path file);

    std::optional<EmbeddingVector> lookup(const std::string& embedder,
                                          const std::string& id,
                                          const std::string& text_hash) const;

    void store(const std::string& embedder, const std::string& id,
               const std::string& text_hash, const EmbeddingVector& vector);

    std::size_t size() const;
    const std::filesystem::path& file() const { return file_; }

private:
    static std::string key(const std::string& embedder, const std::string& id,
                           const std::string& text_hash);

    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, EmbeddingVector> entries_;
    std::ofstream appender_;
};

} // namespace mmrag
