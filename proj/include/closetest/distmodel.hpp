#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "closetest/common.hpp"

namespace closetest {

// Validated probability vector over d categories. Immutable after
// construction; entries are renormalized to sum to 1.
class DiscreteDistribution {
public:
    // Empty placeholder so the type can sit in aggregates; every validated
    // instance comes out of make_distribution.
    DiscreteDistribution() = default;

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

    friend DiscreteDistribution make_distribution(std::vector<double> raw);

private:
    explicit DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
    std::vector<double> probs_;
};

inline DiscreteDistribution make_distribution(std::vector<double> raw) {
    if (raw.empty()) throw EmptyVectorError("make_distribution: empty vector");
    for (double x : raw) {
        if (!(x >= 0.0) || !std::isfinite(x)) {
            throw NegativeEntryError("make_distribution: entries must be finite and >= 0");
        }
    }
    double total = kahan_total(raw);
    if (!(total > 0.0)) throw ZeroSumError("make_distribution: entries sum to zero");
    for (double& x : raw) x /= total;
    return DiscreteDistribution(std::move(raw));
}

// Dyadic level of a positive probability: the unique i with
// p in [2^-i, 2^-i+1). frexp keeps exact powers of two on the correct side
// of the bin boundary, which floor(-log2(p)) does not.
inline int dyadic_level(double p) {
    int e = 0;
    std::frexp(p, &e);
    return 1 - e;
}

// Level sets S_pi(i). Zero-mass categories lie in no dyadic interval and are
// kept apart in zero_support. Category indices are 0-based.
struct LevelSetMap {
    std::map<int, std::vector<int>> sets;
    std::vector<int> zero_support;

    std::size_t level_size(int i) const {
        auto it = sets.find(i);
        return it == sets.end() ? 0 : it->second.size();
    }
};

inline LevelSetMap level_sets(const DiscreteDistribution& pi) {
    LevelSetMap out;
    for (std::size_t j = 0; j < pi.size(); ++j) {
        if (pi[j] > 0.0) {
            out.sets[dyadic_level(pi[j])].push_back(static_cast<int>(j));
        } else {
            out.zero_support.push_back(static_cast<int>(j));
        }
    }
    return out;
}

// Non-increasing rearrangement. order[r] is the category holding rank r;
// ties keep the lower category index first so the view is deterministic.
struct SortedView {
    std::vector<int> order;
    std::vector<double> sorted_probs;
};

inline SortedView sorted_view(const DiscreteDistribution& pi) {
    SortedView v;
    v.order.resize(pi.size());
    std::iota(v.order.begin(), v.order.end(), 0);
    std::stable_sort(v.order.begin(), v.order.end(),
                     [&](int a, int b) { return pi[a] > pi[b]; });
    v.sorted_probs.resize(pi.size());
    for (std::size_t r = 0; r < pi.size(); ++r) v.sorted_probs[r] = pi[v.order[r]];
    return v;
}

// Membership in the class P_pi: for every integer level i,
//   |S_pi(i)| / 2  <=  sum_{j=i-1..i+1} |S_q(j)|  <=  (3/2) sum_{j=i-2..i+2} |S_pi(j)|.
// The scan covers every level present in either map widened by 2; outside
// that range both sides vanish and the inequalities hold vacuously.
inline bool in_class_p_pi(const DiscreteDistribution& q, const DiscreteDistribution& pi) {
    if (q.size() != pi.size()) {
        throw DimensionMismatchError("in_class_p_pi: q and pi must share the support size");
    }
    LevelSetMap lp = level_sets(pi);
    LevelSetMap lq = level_sets(q);
    if (lp.sets.empty() && lq.sets.empty()) return true;

    int lo = INT32_MAX, hi = INT32_MIN;
    for (const auto& [lvl, members] : lp.sets) {
        lo = std::min(lo, lvl);
        hi = std::max(hi, lvl);
    }
    for (const auto& [lvl, members] : lq.sets) {
        lo = std::min(lo, lvl);
        hi = std::max(hi, lvl);
    }
    for (int i = lo - 2; i <= hi + 2; ++i) {
        std::size_t center = lp.level_size(i);
        std::size_t q_window = 0;
        for (int j = i - 1; j <= i + 1; ++j) q_window += lq.level_size(j);
        std::size_t pi_window = 0;
        for (int j = i - 2; j <= i + 2; ++j) pi_window += lp.level_size(j);
        if (static_cast<double>(center) / 2.0 > static_cast<double>(q_window)) return false;
        if (static_cast<double>(q_window) > 1.5 * static_cast<double>(pi_window)) return false;
    }
    return true;
}

// J_pi: smallest 1-based rank j with pi_(j) <= 1/k. When every entry
// exceeds 1/k the minimum is over an empty set; the sentinel d+1 makes
// "ranks >= J" empty so the rate formulas stay well-defined.
inline long long j_index(const DiscreteDistribution& pi, long long k) {
    if (k < 1) throw KTooSmallError("j_index: k must be >= 1");
    SortedView v = sorted_view(pi);
    double cut = 1.0 / static_cast<double>(k);
    for (std::size_t r = 0; r < v.sorted_probs.size(); ++r) {
        if (v.sorted_probs[r] <= cut) return static_cast<long long>(r) + 1;
    }
    return static_cast<long long>(pi.size()) + 1;
}

inline long long j_index(std::span<const double> sorted_probs, long long k) {
    if (k < 1) throw KTooSmallError("j_index: k must be >= 1");
    double cut = 1.0 / static_cast<double>(k);
    for (std::size_t r = 0; r < sorted_probs.size(); ++r) {
        if (sorted_probs[r] <= cut) return static_cast<long long>(r) + 1;
    }
    return static_cast<long long>(sorted_probs.size()) + 1;
}

}  // namespace closetest
