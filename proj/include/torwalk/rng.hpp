#pragma once

#include <cstdint>
#include <random>

namespace torwalk {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-trial stream derived from (master seed, trial index) only, so results
/// are identical no matter how trials are scheduled across workers.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t trial_index) {
    std::uint64_t s = master_seed ^ (0x517cc1b727220a95ULL * (trial_index + 1));
    std::uint64_t a = splitmix64(s), b = splitmix64(s), c = splitmix64(s), d = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                      static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
    return std::mt19937_64(seq);
}

/// Uniform double in [0,1) from the top 53 bits.
inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace torwalk
