#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace gim {

/**
 * Seeded pseudo-random stream.
 *
 * Wraps std::mt19937_64, whose output sequence is fixed by the standard.
 * The derived draws (uniform reals, bounded integers, normals) are computed
 * here rather than through <random> distributions, whose algorithms are
 * implementation-defined, so identical seeds give identical draws on every
 * platform.
 */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer in [0, n). n must be positive.
    int uniform_int(int n);

    /// Standard normal draw (Box-Muller, no caching).
    double normal();

    /// Index drawn from a discrete distribution given by weights.
    /// Weights need not be normalized; the total must be positive.
    int categorical(std::span<const double> weights);

    /// Child stream with a seed derived from this stream's seed and a tag.
    /// Does not advance this stream.
    RngStream derive(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t x);

} // namespace gim
