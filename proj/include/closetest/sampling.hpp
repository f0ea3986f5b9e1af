#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "closetest/common.hpp"
#include "closetest/distmodel.hpp"
#include "closetest/rng.hpp"

namespace closetest {

// Cumulative-table categorical sampler; one draw is a binary search.
class CategoricalSampler {
public:
    explicit CategoricalSampler(const DiscreteDistribution& dist) {
        cdf_.reserve(dist.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            acc += dist[i];
            cdf_.push_back(acc);
        }
        cdf_.back() = 1.0;
    }

    int operator()(RngStream& rng) const {
        double u = rng.next_double();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) --it;
        return static_cast<int>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

inline std::vector<int> sample_categories(const DiscreteDistribution& dist, long long n,
                                          RngStream& rng) {
    if (n < 0) throw BadParameterError("sample_categories: n must be >= 0");
    CategoricalSampler sampler(dist);
    std::vector<int> out(static_cast<std::size_t>(n));
    for (auto& c : out) c = sampler(rng);
    return out;
}

// Multinomial counts: n categorical draws binned, so bin i is marginally
// Binomial(n, p_i).
inline std::vector<long long> sample_multinomial(const DiscreteDistribution& dist, long long n,
                                                 RngStream& rng) {
    if (n < 0) throw BadParameterError("sample_multinomial: n must be >= 0");
    CategoricalSampler sampler(dist);
    std::vector<long long> counts(dist.size(), 0);
    for (long long r = 0; r < n; ++r) counts[static_cast<std::size_t>(sampler(rng))] += 1;
    return counts;
}

// The six Poissonized count vectors the tests consume. budgets holds the
// Poisson(2*k_bar/3) draws, X blocks first then Y blocks; truncated records
// whether any budget exceeded k_bar (the low-probability event outside which
// the counts are exactly independent Poissons).
struct SplitCounts {
    std::array<std::vector<long long>, 3> x;
    std::array<std::vector<long long>, 3> y;
    long long k_bar = 0;
    std::array<long long, 6> budgets{};
    bool truncated = false;

    std::size_t dim() const { return x[0].size(); }
};

// Three-way split plus Poissonization of two raw observation sequences.
// Each sample is shuffled, cut into 3 disjoint blocks of size k_bar, and
// only the first min(budget, k_bar) observations of a block are counted.
// Exchangeability makes the prefix choice distribution-correct.
inline SplitCounts split_and_poissonize(std::span<const int> x_sample,
                                        std::span<const int> y_sample, long long k,
                                        RngStream& rng, std::size_t d) {
    if (k < 3) throw KTooSmallError("split_and_poissonize: k must be >= 3");
    if (x_sample.size() < static_cast<std::size_t>(k) ||
        y_sample.size() < static_cast<std::size_t>(k)) {
        throw BadParameterError("split_and_poissonize: samples shorter than k");
    }
    for (std::size_t r = 0; r < static_cast<std::size_t>(k); ++r) {
        if (x_sample[r] < 0 || static_cast<std::size_t>(x_sample[r]) >= d ||
            y_sample[r] < 0 || static_cast<std::size_t>(y_sample[r]) >= d) {
            throw BadParameterError("split_and_poissonize: category id out of range");
        }
    }
    SplitCounts out;
    out.k_bar = k / 3;
    const double rate = 2.0 * static_cast<double>(out.k_bar) / 3.0;

    std::vector<int> xs(x_sample.begin(), x_sample.begin() + k);
    std::vector<int> ys(y_sample.begin(), y_sample.begin() + k);
    rng.shuffle(xs);
    rng.shuffle(ys);

    for (int j = 0; j < 3; ++j) {
        out.budgets[j] = rng.poisson(rate);
        out.budgets[3 + j] = rng.poisson(rate);
        if (out.budgets[j] > out.k_bar || out.budgets[3 + j] > out.k_bar) out.truncated = true;
    }
    for (int j = 0; j < 3; ++j) {
        out.x[j].assign(d, 0);
        out.y[j].assign(d, 0);
        long long nx = std::min(out.budgets[j], out.k_bar);
        long long ny = std::min(out.budgets[3 + j], out.k_bar);
        std::size_t x_base = static_cast<std::size_t>(j) * static_cast<std::size_t>(out.k_bar);
        std::size_t y_base = x_base;
        for (long long r = 0; r < nx; ++r) out.x[j][static_cast<std::size_t>(xs[x_base + r])] += 1;
        for (long long r = 0; r < ny; ++r) out.y[j][static_cast<std::size_t>(ys[y_base + r])] += 1;
    }
    return out;
}

// Convenience wrapper: draws the two multinomial samples first.
inline SplitCounts split_and_poissonize_draw(const DiscreteDistribution& p,
                                             const DiscreteDistribution& q, long long k,
                                             RngStream& rng) {
    if (k < 3) throw KTooSmallError("split_and_poissonize_draw: k must be >= 3");
    if (p.size() != q.size()) {
        throw DimensionMismatchError("split_and_poissonize_draw: p and q must share d");
    }
    std::vector<int> xs = sample_categories(p, k, rng);
    std::vector<int> ys = sample_categories(q, k, rng);
    return split_and_poissonize(xs, ys, k, rng, p.size());
}

// Shortcut under the exact Poisson model: all six vectors drawn directly as
// independent Poisson(2*k_bar*rate/3) counts, skipping the multinomial
// stage. This is the default path for calibration and risk estimation; the
// split path above is kept for end-to-end fidelity checks.
inline SplitCounts sample_poissonized_direct(const DiscreteDistribution& p,
                                             const DiscreteDistribution& q, long long k,
                                             RngStream& rng) {
    if (k < 3) throw KTooSmallError("sample_poissonized_direct: k must be >= 3");
    if (p.size() != q.size()) {
        throw DimensionMismatchError("sample_poissonized_direct: p and q must share d");
    }
    SplitCounts out;
    out.k_bar = k / 3;
    const double scale = 2.0 * static_cast<double>(out.k_bar) / 3.0;
    const std::size_t d = p.size();
    for (int j = 0; j < 3; ++j) {
        out.x[j].resize(d);
        out.y[j].resize(d);
        long long tx = 0, ty = 0;
        for (std::size_t i = 0; i < d; ++i) {
            out.x[j][i] = rng.poisson(scale * p[i]);
            out.y[j][i] = rng.poisson(scale * q[i]);
            tx += out.x[j][i];
            ty += out.y[j][i];
        }
        out.budgets[j] = tx;
        out.budgets[3 + j] = ty;
    }
    out.truncated = false;
    return out;
}

}  // namespace closetest
