#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ceb {

using Rng = std::mt19937_64;

// Seed used by every entry point when none is given.
inline constexpr std::uint64_t kDefaultSeed = 20240917;

// Independent child stream for (seed, keys...). The same inputs always give
// the same stream; any change to a key gives an unrelated one.
inline Rng child_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (keys.size() + 1));
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(seed);
    for (auto k : keys) push(k);
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

}  // namespace ceb
