#pragma once

#include <cstdint>
#include <random>

namespace lsrk {

// splitmix64; used to spread user seeds and derive independent child streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Child stream k of a master seed. Replications and CV shuffles each get one,
// so parallel execution order cannot change what any consumer draws.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t k) {
    return splitmix64(master + 0x9E3779B97F4A7C15ull * (k + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace lsrk
