#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace banditiv {

using Rng = std::mt19937_64;

// Substream tags. Environment draws are keyed without the policy so that
// matched trials of different policies see identical rounds.
enum class Stream : std::uint64_t {
    environment = 1,
    policy = 2,
    inference = 3,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based seed derivation: every (master, tag...) tuple maps to an
// independent 64-bit seed without any coordination between workers.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t tag : tags) h = splitmix64(h ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
    return Rng(derive_seed(master, tags));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace banditiv
