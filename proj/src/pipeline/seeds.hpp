#pragma once

#include <cstdint>
#include <random>

namespace pointedge::detail {

// Independent sub-streams of one experiment seed, keyed by purpose and index.
enum class Stream : std::uint32_t { train_scene = 1, test_scene = 2, epoch = 3, eval = 4, gradcheck = 5 };

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                      static_cast<std::uint32_t>(index >> 32)};
    std::mt19937_64 rng(seq);
    return rng();
}

}  // namespace pointedge::detail
