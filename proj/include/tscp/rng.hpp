#pragma once

#include <cstdint>
#include <cmath>
#include <random>

// Deterministic randomness utilities.
//
// Every stochastic component in this library draws from std::mt19937_64 and
// converts raw 64-bit outputs to variates by hand.  The standard pins the
// mt19937_64 output sequence, but it does NOT pin the algorithms behind
// std::uniform_real_distribution / std::normal_distribution, so those are
// avoided everywhere reproducibility matters.  Draw order is part of the
// contract: identical seeds give identical streams on every platform.

namespace tscp::rng {

using Engine = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent-looking substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives a substream seed from a master seed and up to three stream tags
// (e.g. seed index, method id, component id).  Chained SplitMix64 keeps
// substreams decorrelated without consuming state from the master engine.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ (a + 0x9e3779b97f4a7c15ULL));
    s = splitmix64(s ^ (b + 0xd1b54a32d192ed03ULL));
    s = splitmix64(s ^ (c + 0x8cb92ba72f3d8dd7ULL));
    return s;
}

// Uniform double in [0, 1) with 53 random bits; one engine draw per call.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

// Uniform integer in [0, n).  Plain modulo: the bias is below 2^-59 for the
// small ranges used here and the draw count stays predictable.
inline std::uint64_t below(Engine& eng, std::uint64_t n) {
    return eng() % n;
}

// Standard normal via Box-Muller.  Consumes two engine draws (plus retries in
// the 2^-53-probability u1 == 0 case) and discards the sine branch, so the
// stream position never depends on call parity.
inline double normal01(Engine& eng) {
    double u1 = uniform01(eng);
    double u2 = uniform01(eng);
    while (u1 <= 0.0) {  // exclude log(0); probability 2^-53 per draw
        u1 = uniform01(eng);
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

inline double normal(Engine& eng, double mean, double sd) {
    return mean + sd * normal01(eng);
}

}  // namespace tscp::rng
