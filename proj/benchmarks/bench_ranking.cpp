#include "mmrag/embedding.hpp"
#include "mmrag/rng.hpp"
#include "mmrag/selection.hpp"

#include <benchmark/benchmark.h>

#include <memory>
#include <string>
#include <vector>

namespace {

using namespace mmrag;

std::string synth_sentence(SplitMix64& rng, std::size_t words) {
    static const std::vector<std::string> pool = {
        "aspirin", "warfarin", "insulin",  "metformin", "patients", "dosage",
        "protein", "gene",     "receptor", "kinase",    "therapy",  "clinical"};
    std::string out;
    for (std::size_t w = 0; w < words; ++w) {
        if (w)
            out += ' ';
        out += pool[rng.bounded(pool.size())];
    }
    return out;
}

std::shared_ptr<const Corpus> synth_corpus(std::size_t n) {
    SplitMix64 rng(7);
    TaskSpec task;
    task.kind = TaskKind::tc;
    task.label_set = {"a", "b", "c"};
    std::vector<Example> examples;
    examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& label = task.label_set[i % 3];
        examples.push_back(
            {"e" + std::to_string(i), synth_sentence(rng, 4 + rng.bounded(8)), label, label});
    }
    return std::make_shared<const Corpus>(task, Split::train, std::move(examples));
}

void BM_reference_embed(benchmark::State& state) {
    SplitMix64 rng(3);
    std::string text = synth_sentence(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(reference_embed(text, 64));
}
BENCHMARK(BM_reference_embed)->Arg(8)->Arg(32)->Arg(128);

void BM_cosine(benchmark::State& state) {
    const auto dims = static_cast<std::size_t>(state.range(0));
    SplitMix64 rng(5);
    EmbeddingVector u = reference_embed(synth_sentence(rng, 16), dims);
    EmbeddingVector v = reference_embed(synth_sentence(rng, 16), dims);
    for (auto _ : state)
        benchmark::DoNotOptimize(cosine(u, v));
}
BENCHMARK(BM_cosine)->Arg(64)->Arg(256)->Arg(1024);

void BM_rank(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto corpus = synth_corpus(n);
    ReferenceEmbedder embedder(64);
    EmbeddedCorpus embedded = embed_corpus(embedder, corpus);
    SplitMix64 rng(11);
    EmbeddingVector query = reference_embed(synth_sentence(rng, 10), 64);
    for (auto _ : state)
        benchmark::DoNotOptimize(rank(embedded, query, "q"));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_rank)->Arg(100)->Arg(1000)->Arg(10000);

void BM_selection_modes(benchmark::State& state) {
    auto corpus = synth_corpus(1000);
    ReferenceEmbedder embedder(64);
    EmbeddedCorpus embedded = embed_corpus(embedder, corpus);
    SplitMix64 rng(13);
    EmbeddingVector query = reference_embed(synth_sentence(rng, 10), 64);
    RankedList ranked = rank(embedded, query, "q");

    switch (state.range(0)) {
    case 0:
        for (auto _ : state)
            benchmark::DoNotOptimize(select_top(ranked, *corpus, 10));
        break;
    case 1:
        for (auto _ : state)
            benchmark::DoNotOptimize(select_diversity(ranked, *corpus, 10, 3));
        break;
    case 2:
        for (auto _ : state)
            benchmark::DoNotOptimize(select_class(ranked, *corpus, corpus->task().label_set));
        break;
    default:
        for (auto _ : state)
            benchmark::DoNotOptimize(select_random(*corpus, 10, 42));
        break;
    }
}
BENCHMARK(BM_selection_modes)->Arg(0)->Arg(1)->Arg(2)->Arg(3);

} // namespace

BENCHMARK_MAIN();
