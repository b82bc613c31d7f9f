// rng.hpp — seed derivation and portable gaussian draws.
//
// Every stochastic task (trapping event, trajectory) owns an engine seeded
// by derive_seed(master, index), so results depend only on the master seed
// and the task index, never on scheduling or worker count.

#pragma once

#include <cstdint>
#include <cmath>
#include <random>

#include "cqed/units.hpp"

namespace cqed {

// splitmix64 finalizer (public-domain constant set).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x51AB61B2E0F6B286ull));
}

// Uniform in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& gen) {
    return double(gen() >> 11) * 0x1.0p-53;
}

// Box-Muller, one normal per call (two engine draws).  Hand-rolled so that
// trajectories are reproducible independent of the standard library's
// normal_distribution implementation.
inline double standard_normal(std::mt19937_64& gen) {
    const double u1 = 1.0 - uniform01(gen);  // (0, 1]
    const double u2 = uniform01(gen);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace cqed
