#include "gim/rng.hpp"

#include "gim/errors.hpp"

#include <cmath>
#include <numbers>

namespace gim {

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int RngStream::uniform_int(int n) {
    if (n <= 0) {
        throw ParamError("uniform_int: n must be positive");
    }
    // Rejection sampling on the top of the 64-bit range keeps draws unbiased.
    const std::uint64_t range = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return static_cast<int>(x % range);
}

double RngStream::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int RngStream::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (!(total > 0.0)) {
        throw ParamError("categorical: weights must have positive total");
    }
    const double target = uniform() * total;
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) {
            continue;
        }
        acc += weights[i];
        last_positive = static_cast<int>(i);
        if (target < acc) {
            return last_positive;
        }
    }
    return last_positive;
}

RngStream RngStream::derive(std::uint64_t tag) const {
    return RngStream(mix_seed(seed_ ^ mix_seed(tag)));
}

} // namespace gim
