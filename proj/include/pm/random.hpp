#pragma once

// Counter-based deterministic randomness. Every value is a pure function of
// (key, draw index, word index), so any draw can be replayed in isolation and
// a fraction drawn at 2B bits begins with exactly the B bits the B-bit draw
// produced. That prefix stability is what makes raising the working precision
// extend the shared randomness instead of resampling it, which the
// reproducibility guarantees rely on.

#include "pm/numeric.hpp"

#include <cstdint>

namespace pm {

struct RandomStream {
    std::uint64_t key = 0;
    std::uint64_t draw = 0;  // index of the next draw

    static RandomStream from_seed(std::uint64_t seed);

    // Derived stream, statistically independent of the parent and of
    // substreams with other tags. Used for per-trial streams.
    RandomStream substream(std::uint64_t tag) const;

    std::uint64_t next_u64();
    double next_unit();                 // 53-bit uniform in [0,1)
    Dyadic next_fraction(long bits);    // uniform on the dyadic grid, one draw index
    std::uint64_t next_below(std::uint64_t n);  // uniform in [0,n), unbiased
};

}  // namespace pm
