#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "closetest/common.hpp"

namespace closetest {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Seeded random stream. Identical (seed, stream_id) pairs reproduce
// identical draws; Monte Carlo loops hand one substream to each trial so
// results do not depend on scheduling. All variate code is hand-rolled on
// top of mt19937_64 (whose output sequence the standard pins down) instead
// of <random> distributions, whose algorithms are implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id),
          eng_(detail::splitmix64(seed ^ detail::splitmix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Derived stream, independent of this one for distinct indices.
    RngStream substream(std::uint64_t index) const {
        return RngStream(seed_, detail::splitmix64(stream_ * 0x9E3779B97F4A7C15ULL + index + 1));
    }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform on {0, ..., n-1}, unbiased via rejection.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw BadParameterError("next_below: n must be positive");
        std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            std::uint64_t r = eng_();
            if (r >= threshold) return r % n;
        }
    }

    bool next_bool() { return (eng_() >> 63) != 0; }

    // Exact Poisson variate: sequential inversion for small means, the PTRS
    // transformed-rejection sampler for large ones. No normal approximation
    // anywhere; tail behaviour matters for the coordinate-wise pre-test.
    long long poisson(double mean) {
        if (mean < 0.0 || !std::isfinite(mean)) {
            throw BadParameterError("poisson: mean must be finite and >= 0");
        }
        if (mean == 0.0) return 0;
        if (mean < 10.0) return poisson_inversion(mean);
        return poisson_ptrs(mean);
    }

    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (std::size_t i = xs.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(xs[i - 1], xs[j]);
        }
    }

private:
    long long poisson_inversion(double mean) {
        double p = std::exp(-mean);
        double cum = p;
        double u = next_double();
        long long x = 0;
        while (u > cum && x < 1000) {
            ++x;
            p *= mean / static_cast<double>(x);
            cum += p;
        }
        return x;
    }

    // Hormann (1993), "The transformed rejection method for generating
    // Poisson random variables", algorithm PTRS.
    long long poisson_ptrs(double mean) {
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            double u = next_double() - 0.5;
            double v = next_double();
            double us = 0.5 - std::abs(u);
            if (us <= 0.0) continue;
            double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            long long k = static_cast<long long>(kf);
            double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return k;
        }
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 eng_;
};

}  // namespace closetest
