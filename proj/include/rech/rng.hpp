#pragma once

#include <cstdint>
#include <random>

namespace rech {

using Rng = std::mt19937_64;

/// Independent stream keyed by (seed, a, b). Used to give every particle at every stage its own
/// generator so results do not depend on how work is split across threads.
inline Rng make_stream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

}  // namespace rech
