#pragma once

#include "mmrag/embedding.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mmrag {

struct RankedEntry {
    std::size_t corpus_index;
    std::string example_id;
    double score;
};

/// Full descending similarity ordering of one training corpus against one
/// query. Equal scores are ordered by ascending example id.
struct RankedList {
    std::string query_id;
    std::vector<RankedEntry> entries;
};

enum class SelectionMode { random, top, diversity, per_class };

std::string to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(std::string_view s);

/// Order of demonstrations inside the prompt for the rank-driven modes.
enum class DemoOrder { similar_first, similar_last };

struct SelectionSpec {
    SelectionMode mode = SelectionMode::top;
    int k = 1;                  // ignored for per_class (k = |label_set|)
    std::uint64_t seed = 0;     // random mode only
    int gap = 1;                // diversity mode only
    DemoOrder order = DemoOrder::similar_first;
};

using Demonstrations = std::vector<Example>;

/// Ranks every training example by cosine similarity to the query vector.
RankedList rank(const EmbeddedCorpus& embedded_train,
                const EmbeddingVector& query_vector,
                std::string query_id);

/// k distinct examples drawn uniformly without replacement; draw order is
/// prompt order. Seeded and portable; independent of any embedding.
Demonstrations select_random(const Corpus& train, int k, std::uint64_t seed);

/// Examples at ranks 0..k-1, most similar first.
Demonstrations select_top(const RankedList& ranked, const Corpus& train, int k);

/// Examples at ranks {0, gap, 2*gap, ..., (k-1)*gap}; gap 1 equals Top.
Demonstrations select_diversity(const RankedList& ranked, const Corpus& train,
                                int k, int gap);

/// For each label in label_set order, the highest-ranked example of that
/// class; result length equals |label_set|.
Demonstrations select_class(const RankedList& ranked, const Corpus& train,
                            const std::vector<std::string>& label_set);

/// TSV rendering of a ranked list: rank<TAB>id<TAB>score, scores with six
/// decimal places, ranks 0-based.
std::string ranked_to_tsv(const RankedList& ranked);

} // namespace mmrag
