#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "closetest/common.hpp"
#include "closetest/distmodel.hpp"

namespace closetest {

// One evaluated rate formula: the separation distance rho, the minimizing
// index (I* or m*, 1-based; d+1 when a minimization range is empty), and
// the value of each term at the minimizer.
struct RateBreakdown {
    double rho = 0.0;
    long long minimizer = 0;
    std::map<std::string, double> terms;
    double u = 0.0;
    double v = 0.0;
};

namespace detail {

// Shared sorted-order sums. All index arithmetic below is 1-based over the
// non-increasing rearrangement, matching the rate formulas.
struct RateContext {
    std::vector<double> sorted;     // sorted[r], r = 1..d
    std::vector<double> tail;       // tail[r] = sum_{i>=r} pi_(i), suffix-accumulated
    std::vector<double> head23;     // head23[r] = sum_{i<=r} pi_(i)^{2/3}
    std::vector<double> head23_from2;  // same but starting at i=2
    long long d = 0;
    long long j_pi = 0;
    double k = 0.0;
    double log_k = 0.0;

    double tail_at(long long r) const { return tail[static_cast<std::size_t>(r)]; }
};

inline RateContext make_rate_context(const DiscreteDistribution& pi, long long k) {
    if (k < 2) throw KTooSmallError("rates: k must be >= 2");
    RateContext ctx;
    SortedView v = sorted_view(pi);
    ctx.d = static_cast<long long>(pi.size());
    ctx.k = static_cast<double>(k);
    ctx.log_k = std::log(ctx.k);
    ctx.sorted.assign(static_cast<std::size_t>(ctx.d) + 2, 0.0);
    for (long long r = 1; r <= ctx.d; ++r) {
        ctx.sorted[static_cast<std::size_t>(r)] = v.sorted_probs[static_cast<std::size_t>(r - 1)];
    }
    ctx.tail.assign(static_cast<std::size_t>(ctx.d) + 2, 0.0);
    for (long long r = ctx.d; r >= 1; --r) {
        ctx.tail[static_cast<std::size_t>(r)] =
            ctx.tail[static_cast<std::size_t>(r + 1)] + ctx.sorted[static_cast<std::size_t>(r)];
    }
    ctx.head23.assign(static_cast<std::size_t>(ctx.d) + 2, 0.0);
    ctx.head23_from2.assign(static_cast<std::size_t>(ctx.d) + 2, 0.0);
    for (long long r = 1; r <= ctx.d; ++r) {
        double p23 = ctx.sorted[static_cast<std::size_t>(r)] > 0.0
                         ? std::pow(ctx.sorted[static_cast<std::size_t>(r)], 2.0 / 3.0)
                         : 0.0;
        ctx.head23[static_cast<std::size_t>(r)] = ctx.head23[static_cast<std::size_t>(r - 1)] + p23;
        ctx.head23_from2[static_cast<std::size_t>(r)] =
            ctx.head23_from2[static_cast<std::size_t>(r - 1)] + (r >= 2 ? p23 : 0.0);
    }
    ctx.j_pi = j_index(std::span<const double>(ctx.sorted).subspan(1, static_cast<std::size_t>(ctx.d)), k);
    return ctx;
}

// ||pi^2 exp(-u k pi)||_1 summed over the sorted vector, ranks ascending.
inline double exp_norm(const RateContext& ctx, double exp_scale) {
    double acc = 0.0;
    for (long long r = 1; r <= ctx.d; ++r) {
        double p = ctx.sorted[static_cast<std::size_t>(r)];
        acc += p * p * std::exp(-exp_scale * ctx.k * p);
    }
    return acc;
}

}  // namespace detail

// Objective of the upper-bound minimization at a candidate I, as a plain
// function of (I, k, precomputed tail and exp-norm). Exposed so tests can
// re-evaluate every candidate against the reported minimizer.
inline double minmax_bracket(long long i_cand, double k, double sqrt_term_scale,
                             double exp_norm_quartic, double tail_value) {
    double sqrt_i = std::sqrt(static_cast<double>(i_cand));
    double t1 = sqrt_i * sqrt_term_scale;
    double t2 = std::sqrt(static_cast<double>(i_cand) / k) * exp_norm_quartic;
    return std::max(std::max(t1, t2), tail_value);
}

// Upper bound on the local minimax separation distance (u = 1/2):
//   min_{I >= J_pi} [ sqrt(I) log(k)/k  v  sqrt(I/k) ||pi^2 e^{-u k pi}||^{1/4}
//                     v  sum_{i >= I} pi_(i) ]
//   v  ||pi_(.)^{2/3} 1{i <= J_pi}||^{3/4} / sqrt(k)  v  sqrt(log(k)/k).
// When J_pi = d+1 there are no sub-1/k ranks, the bracket is empty and only
// the head and floor terms remain.
inline RateBreakdown upper_rate(const DiscreteDistribution& pi, long long k, double u = 0.5) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    RateBreakdown out;
    out.u = u;

    double e4 = std::pow(detail::exp_norm(ctx, u), 0.25);
    double head_norm = ctx.j_pi <= ctx.d ? ctx.head23[static_cast<std::size_t>(ctx.j_pi)]
                                         : ctx.head23[static_cast<std::size_t>(ctx.d)];
    double head = std::pow(head_norm, 0.75) / std::sqrt(ctx.k);
    double floor_term = std::sqrt(ctx.log_k / ctx.k);
    double sqrt_scale = ctx.log_k / ctx.k;

    out.terms["head_23"] = head;
    out.terms["floor_sqrtlogk"] = floor_term;
    double bracket = 0.0;
    if (ctx.j_pi <= ctx.d) {
        long long best_i = ctx.j_pi;
        double best = minmax_bracket(ctx.j_pi, ctx.k, sqrt_scale, e4, ctx.tail_at(ctx.j_pi));
        for (long long i = ctx.j_pi + 1; i <= ctx.d; ++i) {
            double val = minmax_bracket(i, ctx.k, sqrt_scale, e4, ctx.tail_at(i));
            if (val < best) {
                best = val;
                best_i = i;
            }
        }
        bracket = best;
        out.minimizer = best_i;
        out.terms["mid_sqrtI"] = std::sqrt(static_cast<double>(best_i)) * sqrt_scale;
        out.terms["mid_exp"] = std::sqrt(static_cast<double>(best_i) / ctx.k) * e4;
        out.terms["tail_l1"] = ctx.tail_at(best_i);
    } else {
        out.minimizer = ctx.d + 1;
    }
    out.rho = std::max(std::max(bracket, head), floor_term);
    return out;
}

// Lower bound on the local minimax separation distance (exponent 2+v):
// same structure with sqrt(I)/k in place of sqrt(I) log(k)/k and 1/sqrt(k)
// as the floor.
inline RateBreakdown lower_rate(const DiscreteDistribution& pi, long long k, double v = 0.001) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    RateBreakdown out;
    out.u = 2.0 + v;
    out.v = v;

    double e4 = std::pow(detail::exp_norm(ctx, 2.0 + v), 0.25);
    double head_norm = ctx.j_pi <= ctx.d ? ctx.head23[static_cast<std::size_t>(ctx.j_pi)]
                                         : ctx.head23[static_cast<std::size_t>(ctx.d)];
    double head = std::pow(head_norm, 0.75) / std::sqrt(ctx.k);
    double floor_term = std::sqrt(1.0 / ctx.k);
    double sqrt_scale = 1.0 / ctx.k;

    out.terms["head_23"] = head;
    out.terms["floor_sqrtk"] = floor_term;
    double bracket = 0.0;
    if (ctx.j_pi <= ctx.d) {
        long long best_i = ctx.j_pi;
        double best = minmax_bracket(ctx.j_pi, ctx.k, sqrt_scale, e4, ctx.tail_at(ctx.j_pi));
        for (long long i = ctx.j_pi + 1; i <= ctx.d; ++i) {
            double val = minmax_bracket(i, ctx.k, sqrt_scale, e4, ctx.tail_at(i));
            if (val < best) {
                best = val;
                best_i = i;
            }
        }
        bracket = best;
        out.minimizer = best_i;
        out.terms["mid_sqrtI"] = std::sqrt(static_cast<double>(best_i)) * sqrt_scale;
        out.terms["mid_exp"] = std::sqrt(static_cast<double>(best_i) / ctx.k) * e4;
        out.terms["tail_l1"] = ctx.tail_at(best_i);
    } else {
        out.minimizer = ctx.d + 1;
    }
    out.rho = std::max(std::max(bracket, head), floor_term);
    return out;
}

// Identity-testing rate:
//   min_m [ ||pi_(.)^{2/3} 1{2 <= i < m}||^{3/4} / sqrt(k)  v  1/k
//           v  ||pi_(.) 1{i >= m}||_1 ],  m in {1, ..., d+1}.
// The head deliberately excludes the largest coordinate.
inline RateBreakdown identity_rate(const DiscreteDistribution& pi, long long k) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    RateBreakdown out;

    double floor_term = 1.0 / ctx.k;
    long long best_m = 1;
    double best = std::numeric_limits<double>::infinity();
    for (long long m = 1; m <= ctx.d + 1; ++m) {
        double head_norm = m >= 2 ? ctx.head23_from2[static_cast<std::size_t>(m - 1)] : 0.0;
        double head = std::pow(head_norm, 0.75) / std::sqrt(ctx.k);
        double tail_value = ctx.tail_at(m);
        double val = std::max(std::max(head, floor_term), tail_value);
        if (val < best) {
            best = val;
            best_m = m;
        }
    }
    out.rho = best;
    out.minimizer = best_m;
    double head_norm = best_m >= 2 ? ctx.head23_from2[static_cast<std::size_t>(best_m - 1)] : 0.0;
    out.terms["head_23"] = std::pow(head_norm, 0.75) / std::sqrt(ctx.k);
    out.terms["floor_1k"] = floor_term;
    out.terms["tail_l1"] = ctx.tail_at(best_m);
    return out;
}

// Comparison rate in the style of Diakonikolas-Kane:
//   ||1{pi < 1/k}||^{1/2} ||pi^2 1{pi < 1/k}||^{1/4} / sqrt(k)
//   v  ||pi^{2/3}||^{3/4} / sqrt(k).
inline RateBreakdown dk16_rate(const DiscreteDistribution& pi, long long k) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    RateBreakdown out;

    double cut = 1.0 / ctx.k;
    double n_small = 0.0;
    double sq_small = 0.0;
    for (long long r = 1; r <= ctx.d; ++r) {
        double p = ctx.sorted[static_cast<std::size_t>(r)];
        if (p < cut) {
            n_small += 1.0;
            sq_small += p * p;
        }
    }
    double small_term = std::sqrt(n_small) * std::pow(sq_small, 0.25) / std::sqrt(ctx.k);
    double head_term =
        std::pow(ctx.head23[static_cast<std::size_t>(ctx.d)], 0.75) / std::sqrt(ctx.k);
    out.terms["tail_small"] = small_term;
    out.terms["head_23"] = head_term;
    out.rho = std::max(small_term, head_term);
    out.minimizer = 0;
    return out;
}

// C_pi = sqrt(sum_i pi_i^2 exp(-2(1+v) k pi_i)) / k, the mass scale of the
// lower-bound construction.
inline double c_pi(const DiscreteDistribution& pi, long long k, double v) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    return std::sqrt(detail::exp_norm(ctx, 2.0 * (1.0 + v))) / ctx.k;
}

// I_{v,pi}: smallest rank j in {J_pi, ..., d} with
//   pi_(j) <= sqrt(C_pi / j),
//   sum_{i >= j} exp(-2 k pi_(i)) pi_(i)^2 <= C_pi,
//   sum_{i >= j} pi_(i) <= sum_{J_pi <= i < j} pi_(i);
// d if no rank qualifies (empty-minimum convention).
inline long long i_v_pi(const DiscreteDistribution& pi, long long k, double v) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    double c = std::sqrt(detail::exp_norm(ctx, 2.0 * (1.0 + v))) / ctx.k;

    std::vector<double> suffix_exp2(static_cast<std::size_t>(ctx.d) + 2, 0.0);
    for (long long r = ctx.d; r >= 1; --r) {
        double p = ctx.sorted[static_cast<std::size_t>(r)];
        suffix_exp2[static_cast<std::size_t>(r)] =
            suffix_exp2[static_cast<std::size_t>(r + 1)] + std::exp(-2.0 * ctx.k * p) * p * p;
    }
    double prefix_from_j = 0.0;  // sum_{J_pi <= i < j} pi_(i), forward
    for (long long j = ctx.j_pi; j <= ctx.d; ++j) {
        double pj = ctx.sorted[static_cast<std::size_t>(j)];
        bool c1 = pj <= std::sqrt(c / static_cast<double>(j));
        bool c2 = suffix_exp2[static_cast<std::size_t>(j)] <= c;
        bool c3 = ctx.tail_at(j) <= prefix_from_j;
        if (c1 && c2 && c3) return j;
        prefix_from_j += pj;
    }
    return ctx.d;
}

// One row of the regime comparison: an index range and the contribution of
// its coordinates to each of the three rate formulas.
struct RegimeRow {
    std::string range;
    long long lo = 0, hi = 0;  // 1-based, inclusive; hi < lo means empty
    double ours = 0.0;
    double identity = 0.0;
    double dk16 = 0.0;
};

struct RegimeTable {
    std::vector<RegimeRow> rows;
    long long j_pi = 0, i_star = 0, m_star = 0;
    bool clamped = false;
};

// Regime decomposition over the four ranges cut at J_pi, I*, m*. The two
// minimizers come from different objectives, so the ordering
// J_pi <= I* <= m* is enforced by clamping and the table records when that
// fired.
inline RegimeTable regime_table(const DiscreteDistribution& pi, long long k) {
    detail::RateContext ctx = detail::make_rate_context(pi, k);
    RegimeTable table;
    table.j_pi = ctx.j_pi;
    RateBreakdown up = upper_rate(pi, k);
    RateBreakdown id = identity_rate(pi, k);
    table.i_star = up.minimizer;
    table.m_star = id.minimizer;
    if (table.i_star < table.j_pi) {
        table.i_star = table.j_pi;
        table.clamped = true;
    }
    if (table.m_star < table.i_star) {
        table.m_star = table.i_star;
        table.clamped = true;
    }

    double e4_u = std::pow(detail::exp_norm(ctx, 0.5), 0.25);
    auto head_piece = [&](long long lo, long long hi) {
        double norm = 0.0;
        for (long long r = lo; r <= hi; ++r) {
            double p = ctx.sorted[static_cast<std::size_t>(r)];
            if (p > 0.0) norm += std::pow(p, 2.0 / 3.0);
        }
        return std::pow(norm, 0.75) / std::sqrt(ctx.k);
    };
    auto l1_piece = [&](long long lo, long long hi) {
        double s = 0.0;
        for (long long r = lo; r <= hi; ++r) s += ctx.sorted[static_cast<std::size_t>(r)];
        return s;
    };
    auto dk16_piece = [&](long long lo, long long hi) {
        double n = static_cast<double>(hi - lo + 1);
        if (n <= 0.0) return 0.0;
        double sq = 0.0;
        for (long long r = lo; r <= hi; ++r) {
            double p = ctx.sorted[static_cast<std::size_t>(r)];
            sq += p * p;
        }
        return std::sqrt(n / ctx.k) * std::pow(sq, 0.25);
    };

    // Half-open cuts [1,J), [J,I*), [I*,m*), [m*,d] keep the ranges a
    // partition of {1..d}; boundaries above d are empty ranges.
    long long j_cut = std::min(table.j_pi, ctx.d + 1);
    long long i_cut = std::min(table.i_star, ctx.d + 1);
    long long m_cut = std::min(table.m_star, ctx.d + 1);

    auto add_row = [&](const std::string& name, long long lo, long long hi, int kind) {
        RegimeRow row;
        row.range = name;
        row.lo = lo;
        row.hi = hi;
        if (hi >= lo) {
            row.identity = (kind <= 2) ? head_piece(lo, hi) : l1_piece(lo, hi);
            row.dk16 = (kind == 0) ? head_piece(lo, hi) : dk16_piece(lo, hi);
            switch (kind) {
                case 0:
                    row.ours = head_piece(lo, hi);
                    break;
                case 1: {
                    double n = static_cast<double>(hi - lo + 1);
                    row.ours = std::sqrt(n / ctx.k) * std::max(e4_u, 1.0 / std::sqrt(ctx.k));
                    break;
                }
                default:
                    row.ours = l1_piece(lo, hi);
                    break;
            }
        }
        table.rows.push_back(row);
    };
    add_row("head", 1, j_cut - 1, 0);
    add_row("mid", j_cut, i_cut - 1, 1);
    add_row("upper_tail", i_cut, m_cut - 1, 2);
    add_row("far_tail", m_cut, ctx.d, 3);
    return table;
}

}  // namespace closetest
