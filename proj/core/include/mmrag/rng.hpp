#pragma once

#include <cstdint>
#include <numeric>
#include <string_view>
#include <vector>

namespace mmrag {

// Portable seeded primitives. Every reproducibility contract in the library
// (random selection, corrupt-mock subsets, reference embedding buckets,
// per-query derived seeds) is pinned to these exact algorithms, so results
// are bit-identical across platforms and runs.

/// FNV-1a 64-bit hash.
constexpr std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// splitmix64 stream; state advances on every draw.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Draw in [0, n) via 128-bit multiply-shift.
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

/// First k entries of a seeded Fisher-Yates shuffle of 0..n-1, in draw order.
inline std::vector<std::size_t> sample_prefix(std::size_t n, std::size_t k,
                                              std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

/// Per-query seed for Random Mode: run seed XOR 64-bit hash of the query id.
inline std::uint64_t derive_query_seed(std::uint64_t run_seed, std::string_view query_id) {
    return run_seed ^ fnv1a64(query_id);
}

} // namespace mmrag
