#include "mmrag/selection.hpp"

#include "mmrag/errors.hpp"
#include "mmrag/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

namespace mmrag {

std::string to_string(SelectionMode mode) {
    switch (mode) {
    case SelectionMode::random: return "random";
    case SelectionMode::top: return "top";
    case SelectionMode::diversity: return "diversity";
    case SelectionMode::per_class: return "class";
    }
    return "?";
}

SelectionMode selection_mode_from_string(std::string_view s) {
    if (s == "random") return SelectionMode::random;
    if (s == "top") return SelectionMode::top;
    if (s == "diversity") return SelectionMode::diversity;
    if (s == "class") return SelectionMode::per_class;
    throw Error("unknown selection mode \"" + std::string(s) + "\"");
}

RankedList rank(const EmbeddedCorpus& embedded_train,
                const EmbeddingVector& query_vector,
                std::string query_id) {
    const Corpus& train = *embedded_train.corpus;
    if (train.size() == 0)
        throw EmptyCorpus("cannot rank against an empty training corpus");

    RankedList ranked;
    ranked.query_id = std::move(query_id);
    ranked.entries.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        ranked.entries.push_back(RankedEntry{
            i, train.at(i).id, cosine(embedded_train.vectors[i], query_vector)});
    }
    std::sort(ranked.entries.begin(), ranked.entries.end(),
              [](const RankedEntry& a, const RankedEntry& b) {
                  if (a.score != b.score)
                      return a.score > b.score;
                  return a.example_id < b.example_id;
              });
    return ranked;
}

Demonstrations select_random(const Corpus& train, int k, std::uint64_t seed) {
    if (k < 1)
        throw Error("k must be positive");
    const std::size_t n = train.size();
    if (static_cast<std::size_t>(k) > n)
        throw KTooLarge(static_cast<std::size_t>(k), n);

    Demonstrations demos;
    demos.reserve(static_cast<std::size_t>(k));
    for (std::size_t idx : sample_prefix(n, static_cast<std::size_t>(k), seed))
        demos.push_back(train.at(idx));
    return demos;
}

Demonstrations select_top(const RankedList& ranked, const Corpus& train, int k) {
    if (k < 1)
        throw Error("k must be positive");
    if (static_cast<std::size_t>(k) > ranked.entries.size())
        throw KTooLarge(static_cast<std::size_t>(k), ranked.entries.size());

    Demonstrations demos;
    demos.reserve(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r)
        demos.push_back(train.at(ranked.entries[static_cast<std::size_t>(r)].corpus_index));
    return demos;
}

Demonstrations select_diversity(const RankedList& ranked, const Corpus& train,
                                int k, int gap) {
    if (k < 1)
        throw Error("k must be positive");
    if (gap < 1)
        throw Error("gap must be positive");
    const std::size_t needed =
        static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(gap) + 1;
    if (needed > ranked.entries.size())
        throw InsufficientCorpus(needed, ranked.entries.size());

    Demonstrations demos;
    demos.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        std::size_t r = static_cast<std::size_t>(i) * static_cast<std::size_t>(gap);
        demos.push_back(train.at(ranked.entries[r].corpus_index));
    }
    return demos;
}

Demonstrations select_class(const RankedList& ranked, const Corpus& train,
                            const std::vector<std::string>& label_set) {
    if (label_set.empty())
        throw InvalidTaskSpec("class selection requires a non-empty label set");

    // Highest-ranked example per label; ranked order makes the first hit the max.
    std::unordered_map<std::string, const RankedEntry*> best;
    for (const RankedEntry& entry : ranked.entries) {
        const Example& ex = train.at(entry.corpus_index);
        if (!ex.class_label)
            throw MissingClassLabel(ex.id);
        best.try_emplace(*ex.class_label, &entry);
    }

    Demonstrations demos;
    demos.reserve(label_set.size());
    for (const std::string& label : label_set) {
        auto it = best.find(label);
        if (it == best.end())
            throw EmptyClass(label);
        demos.push_back(train.at(it->second->corpus_index));
    }
    return demos;
}

std::string ranked_to_tsv(const RankedList& ranked) {
    std::string out;
    char buf[64];
    for (std::size_t r = 0; r < ranked.entries.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%zu\t", r);
        out += buf;
        out += ranked.entries[r].example_id;
        std::snprintf(buf, sizeof buf, "\t%.6f\n", ranked.entries[r].score);
        out += buf;
    }
    return out;
}

} // namespace mmrag
