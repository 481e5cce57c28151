#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace infosample {

using Rng = std::mt19937_64;
using RngSeed = std::uint64_t;

// The std:: distributions are implementation-defined, so recorded seeds would
// not reproduce across standard libraries. These draw straight from the
// engine's bits, whose sequence the standard fixes.

/// Mixes (seed, stream) into an independent seed with splitmix64.
RngSeed derive_seed(RngSeed seed, std::uint64_t stream);

/// Uniform in [0, 1) with 53 bits of resolution.
double uniform01(Rng& rng);

double uniform(Rng& rng, double lo, double hi);

/// Box-Muller; consumes two engine outputs per call.
double standard_normal(Rng& rng);

/// Unbiased uniform integer in [0, n). n must be positive.
std::size_t uniform_index(Rng& rng, std::size_t n);

}  // namespace infosample
