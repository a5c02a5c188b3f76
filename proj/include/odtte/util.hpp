#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace odtte {

// FNV-1a 64-bit hash, used for config digests and sub-seed derivation.
std::uint64_t fnv1a(std::string_view s);

std::uint64_t splitmix64(std::uint64_t x);

// All randomness flows from one master seed through named sub-seeds
// (e.g. "data", "split", "init", "shuffle") so components vary independently.
std::uint64_t derive_seed(std::uint64_t master, std::string_view name);

// Shortest round-trip decimal formatting (std::to_chars). CSV output built
// from this is byte-stable and parses back to the identical double.
std::string fmt_double(double v);

double parse_double(std::string_view s); // throws ParseError
std::int64_t parse_int(std::string_view s);

std::string trim(std::string_view s);
std::vector<std::string> split_csv_line(const std::string& line);

// Uniform double in [0,1) from 53 random bits; identical on every platform
// for the same engine state, unlike std::uniform_real_distribution.
template <class Rng> double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <class Rng> double uniform_range(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, one draw per call (the pair's second half is discarded to keep
// the consumption pattern trivially reproducible).
template <class Rng> double normal01(Rng& rng) {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

} // namespace odtte
