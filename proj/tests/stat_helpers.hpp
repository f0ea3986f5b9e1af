#pragma once

// Test-only statistical oracles: gamma-function machinery, chi-square
// quantiles and goodness-of-fit helpers. Deliberately independent of the
// library's sampling and testing code paths so tests compare against
// textbook formulas, not the implementation under test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

namespace statcheck {

// Regularized lower incomplete gamma P(s, x) via series / continued
// fraction (Numerical Recipes style).
inline double gamma_p(double s, double x) {
    if (x < 0.0 || s <= 0.0) throw std::invalid_argument("gamma_p domain");
    if (x == 0.0) return 0.0;
    if (x < s + 1.0) {
        double ap = s;
        double sum = 1.0 / s;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
    // continued fraction for Q(s, x)
    double b = x + 1.0 - s;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    double q = std::exp(-x + s * std::log(x) - std::lgamma(s)) * h;
    return 1.0 - q;
}

inline double chi_square_cdf(double x, double df) { return gamma_p(df / 2.0, x / 2.0); }

// Upper quantile: smallest x with cdf(x) >= p, by bisection.
inline double chi_square_quantile(double p, double df) {
    double lo = 0.0, hi = df + 100.0 * std::sqrt(2.0 * df) + 100.0;
    while (chi_square_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (chi_square_cdf(mid, df) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

inline double poisson_pmf(double lambda, long long k) {
    if (k < 0) return 0.0;
    return std::exp(-lambda + k * std::log(lambda) - std::lgamma(static_cast<double>(k) + 1.0));
}

// Pearson chi-square GOF of observed integer draws against a Poisson pmf.
// Bins are consecutive integers merged until every expected count reaches
// min_expected; returns true when the statistic stays below the upper
// (1 - level) chi-square quantile.
inline bool poisson_gof_passes(const std::vector<long long>& draws, double lambda, double level,
                               double min_expected = 5.0) {
    if (draws.empty()) throw std::invalid_argument("poisson_gof: no draws");
    long long max_v = *std::max_element(draws.begin(), draws.end());
    std::vector<double> expected;
    std::vector<double> observed;
    std::vector<long long> histo(static_cast<std::size_t>(max_v) + 1, 0);
    for (long long v : draws) histo[static_cast<std::size_t>(v)] += 1;
    double n = static_cast<double>(draws.size());

    double acc_exp = 0.0, acc_obs = 0.0;
    double tail_mass = 1.0;
    for (long long v = 0; v <= max_v; ++v) {
        double pm = poisson_pmf(lambda, v);
        tail_mass -= pm;
        acc_exp += n * pm;
        acc_obs += static_cast<double>(histo[static_cast<std::size_t>(v)]);
        if (acc_exp >= min_expected) {
            expected.push_back(acc_exp);
            observed.push_back(acc_obs);
            acc_exp = 0.0;
            acc_obs = 0.0;
        }
    }
    // everything above max_v plus any partial bin goes into the tail bin
    acc_exp += n * std::max(0.0, tail_mass);
    if (!expected.empty()) {
        expected.back() += acc_exp;
        observed.back() += acc_obs;
    } else {
        expected.push_back(acc_exp);
        observed.push_back(acc_obs);
    }
    if (expected.size() < 2) return true;  // degenerate: nothing to test

    double stat = 0.0;
    for (std::size_t b = 0; b < expected.size(); ++b) {
        double diff = observed[b] - expected[b];
        stat += diff * diff / expected[b];
    }
    double df = static_cast<double>(expected.size()) - 1.0;
    return stat <= chi_square_quantile(1.0 - level, df);
}

// Two-sample Pearson chi-square on integer histograms, cells merged while
// the pooled expected count is small.
inline bool two_sample_chi_square_passes(const std::vector<long long>& a,
                                         const std::vector<long long>& b, double level,
                                         double min_expected = 5.0) {
    std::map<long long, std::pair<double, double>> cells;
    for (long long v : a) cells[v].first += 1.0;
    for (long long v : b) cells[v].second += 1.0;
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());

    std::vector<std::pair<double, double>> merged;
    double ca = 0.0, cb = 0.0;
    for (const auto& [v, oc] : cells) {
        ca += oc.first;
        cb += oc.second;
        double pooled = (ca + cb) * na / (na + nb);
        double pooled_b = (ca + cb) * nb / (na + nb);
        if (pooled >= min_expected && pooled_b >= min_expected) {
            merged.emplace_back(ca, cb);
            ca = cb = 0.0;
        }
    }
    if (ca + cb > 0.0) {
        if (!merged.empty()) {
            merged.back().first += ca;
            merged.back().second += cb;
        } else {
            merged.emplace_back(ca, cb);
        }
    }
    if (merged.size() < 2) return true;

    double stat = 0.0;
    for (const auto& [oa, ob] : merged) {
        double tot = oa + ob;
        double ea = tot * na / (na + nb);
        double eb = tot * nb / (na + nb);
        stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    double df = static_cast<double>(merged.size()) - 1.0;
    return stat <= chi_square_quantile(1.0 - level, df);
}

inline double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double stddev_of(const std::vector<double>& xs) {
    double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / (static_cast<double>(xs.size()) - 1.0));
}

}  // namespace statcheck
