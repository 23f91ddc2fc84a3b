#include "mmrag/cache.hpp"

#include "mmrag/errors.hpp"

#include "json.hpp"

#include <iostream>

namespace mmrag {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<std::pair<std::string, EmbeddingVector>> parse_line(const std::string& line) {
    nlohmann::json record;
    try {
        record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
    if (!record.is_object() || !record.contains("embedder") || !record.contains("id") ||
        !record.contains("hash") || !record.contains("vector"))
        return std::nullopt;
    if (!record["embedder"].is_string() || !record["id"].is_string() ||
        !record["hash"].is_string() || !record["vector"].is_array())
        return std::nullopt;
    EmbeddingVector vec;
    vec.values.reserve(record["vector"].size());
    for (const auto& v : record["vector"]) {
        if (!v.is_number())
            return std::nullopt;
        vec.values.push_back(v.get<double>());
    }
    std::string key = record["embedder"].get<std::string>() + "\x1f" +
                      record["id"].get<std::string>() + "\x1f" +
                      record["hash"].get<std::string>();
    return std::make_pair(std::move(key), std::move(vec));
}

} // namespace

std::string EmbeddingCache::key(const std::string& embedder, const std::string& id,
                                const std::string& text_hash) {
    return embedder + "\x1f" + id + "\x1f" + text_hash;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
    if (std::filesystem::exists(file_)) {
        std::ifstream in(file_, std::ios::binary);
        if (!in)
            throw IoError("cannot open embedding cache " + file_.string());

        std::string line;
        std::uintmax_t good_bytes = 0;
        bool corrupt_tail = false;
        while (std::getline(in, line)) {
            bool had_newline = !in.eof();
            auto parsed = parse_line(line);
            if (!parsed) {
                if (had_newline) {
                    // A later, intact line follows; this is not a torn append.
                    std::string next;
                    if (std::getline(in, next))
                        throw IoError("embedding cache " + file_.string() +
                                      " is corrupt beyond its trailing line");
                }
                corrupt_tail = true;
                break;
            }
            entries_[parsed->first] = std::move(parsed->second);
            good_bytes += line.size() + (had_newline ? 1 : 0);
        }
        if (corrupt_tail) {
            std::cerr << "warning: truncating corrupt trailing line of embedding cache "
                      << file_.string() << "\n";
            std::filesystem::resize_file(file_, good_bytes);
        }
    }
    appender_.open(file_, std::ios::binary | std::ios::app);
    if (!appender_)
        throw IoError("cannot open embedding cache for append: " + file_.string());
}

std::optional<EmbeddingVector> EmbeddingCache::lookup(const std::string& embedder,
                                                      const std::string& id,
                                                      const std::string& text_hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key(embedder, id, text_hash));
    if (it == entries_.end())
        return std::nullopt;
    return it->second;
}

void EmbeddingCache::store(const std::string& embedder, const std::string& id,
                           const std::string& text_hash, const EmbeddingVector& vector) {
    std::lock_guard lock(mutex_);
    ordered_json record;
    record["embedder"] = embedder;
    record["id"] = id;
    record["hash"] = text_hash;
    record["vector"] = vector.values;
    appender_ << record.dump() << '\n';
    appender_.flush();
    if (!appender_)
        throw IoError("failed appending to embedding cache " + file_.string());
    entries_[key(embedder, id, text_hash)] = vector;
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

} // namespace mmrag
