#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "closetest/adversarial.hpp"
#include "closetest/common.hpp"
#include "closetest/distmodel.hpp"
#include "closetest/rates.hpp"
#include "closetest/rng.hpp"
#include "closetest/sampling.hpp"
#include "closetest/testers.hpp"

namespace closetest {

inline DiscreteDistribution family_uniform(int d) {
    if (d < 1) throw BadParameterError("family_uniform: d must be >= 1");
    return make_distribution(std::vector<double>(static_cast<std::size_t>(d), 1.0));
}

inline DiscreteDistribution family_zipf(int d, double s) {
    if (d < 1) throw BadParameterError("family_zipf: d must be >= 1");
    if (!(s >= 0.0)) throw BadParameterError("family_zipf: s must be >= 0");
    std::vector<double> w(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = std::pow(i + 1.0, -s);
    return make_distribution(std::move(w));
}

// The two-spike example: pi_1 = 1/2, pi_2 = 1/2 - h, and k^4 coordinates of
// mass h/k^4 each. Support size k^4 + 2 is capped at 1e7 for desk use.
inline DiscreteDistribution family_two_spike(long long k, double h) {
    if (k < 2) throw KTooSmallError("family_two_spike: k must be >= 2");
    if (!(h > 0.0 && h < 0.5)) throw BadParameterError("family_two_spike: h must lie in (0, 1/2)");
    double d_real = std::pow(static_cast<double>(k), 4.0) + 2.0;
    if (d_real > 1e7) throw KTooLargeForDeskError("family_two_spike: k^4 + 2 exceeds 1e7");
    long long d = k * k * k * k + 2;
    std::vector<double> w(static_cast<std::size_t>(d), h / std::pow(static_cast<double>(k), 4.0));
    w[0] = 0.5;
    w[1] = 0.5 - h;
    return make_distribution(std::move(w));
}

// Half the categories on one dyadic level, half three times heavier.
inline DiscreteDistribution family_two_level(int d) {
    if (d < 1) throw BadParameterError("family_two_level: d must be >= 1");
    std::vector<double> w(static_cast<std::size_t>(d), 1.0);
    for (int i = 0; i < d / 2; ++i) w[static_cast<std::size_t>(i)] = 3.0;
    return make_distribution(std::move(w));
}

// Default calibration suite: the multipliers are meant to work for any
// shape, so calibration stresses a flat, a heavy-tailed and a two-level
// distribution at the caller's support size.
inline std::vector<DiscreteDistribution> default_calibration_suite(int d) {
    return {family_uniform(d), family_zipf(d, 1.0), family_two_level(d)};
}

struct RiskEstimate {
    double type1 = 0.0;
    double type2 = 0.0;
    int n_trials = 0;
    double se1 = 0.0;
    double se2 = 0.0;
    double truncation_rate = 0.0;
};

using PairGenerator =
    std::function<std::pair<DiscreteDistribution, DiscreteDistribution>(RngStream&)>;

inline PairGenerator fixed_pair(DiscreteDistribution p, DiscreteDistribution q) {
    return [p = std::move(p), q = std::move(q)](RngStream&) { return std::make_pair(p, q); };
}

// Monte Carlo risk: type-I rejection frequency under null_gen, type-II
// acceptance frequency under alt_gen, on fresh Poissonized draws. The two
// estimates use disjoint substreams so repeated calls are bit-identical.
inline RiskEstimate estimate_risk(const TestConstants& constants, const PairGenerator& null_gen,
                                  const PairGenerator& alt_gen, long long k, int n_trials,
                                  RngStream& rng) {
    if (n_trials < 100) throw BudgetTooSmallError("estimate_risk: n_trials must be >= 100");
    RiskEstimate est;
    est.n_trials = n_trials;
    long long rejects = 0, accepts = 0, truncated = 0;
    for (int t = 0; t < n_trials; ++t) {
        RngStream s0 = rng.substream(2 * static_cast<std::uint64_t>(t));
        auto [p0, q0] = null_gen(s0);
        SplitCounts c0 = sample_poissonized_direct(p0, q0, k, s0);
        if (c0.truncated) ++truncated;
        if (combined_test(c0, constants).combined) ++rejects;

        RngStream s1 = rng.substream(2 * static_cast<std::uint64_t>(t) + 1);
        auto [p1, q1] = alt_gen(s1);
        SplitCounts c1 = sample_poissonized_direct(p1, q1, k, s1);
        if (c1.truncated) ++truncated;
        if (!combined_test(c1, constants).combined) ++accepts;
    }
    double n = static_cast<double>(n_trials);
    est.type1 = static_cast<double>(rejects) / n;
    est.type2 = static_cast<double>(accepts) / n;
    est.se1 = std::sqrt(est.type1 * (1.0 - est.type1) / n);
    est.se2 = std::sqrt(est.type2 * (1.0 - est.type2) / n);
    est.truncation_rate = static_cast<double>(truncated) / (2.0 * n);
    return est;
}

// Alternative at exact L1 distance rho from pi: mass rho/2 is removed from
// the smallest sorted coordinates (zeroing them one by one) and parked on
// the largest coordinate.
inline DiscreteDistribution transport_alternative(const DiscreteDistribution& pi, double rho) {
    if (!(rho >= 0.0)) throw BadParameterError("transport_alternative: rho must be >= 0");
    SortedView view = sorted_view(pi);
    std::vector<double> p = pi.probs();
    double to_move = rho / 2.0;
    int top = view.order.front();
    double moved = 0.0;
    for (std::size_t r = view.order.size(); r-- > 1;) {
        if (moved >= to_move) break;
        int idx = view.order[r];
        double take = std::min(p[static_cast<std::size_t>(idx)], to_move - moved);
        p[static_cast<std::size_t>(idx)] -= take;
        moved += take;
    }
    if (moved + 1e-15 < to_move) {
        throw BadParameterError("transport_alternative: rho exceeds the movable mass");
    }
    p[static_cast<std::size_t>(top)] += moved;
    return make_distribution(std::move(p));
}

// A separation direction: for scale t in [0,1] produces a pair (p_t, q)
// whose exact L1 distance is returned alongside, continuous and increasing
// in t. Deterministic directions ignore the stream.
struct Direction {
    std::string name;
    double max_l1 = 0.0;
    std::function<std::tuple<DiscreteDistribution, DiscreteDistribution, double>(
        double, RngStream&)> generate;
};

inline Direction tail_transport_direction(const DiscreteDistribution& pi) {
    Direction dir;
    dir.name = "tail-transport";
    SortedView view = sorted_view(pi);
    dir.max_l1 = 2.0 * (1.0 - view.sorted_probs.front());
    DiscreteDistribution base = pi;
    double cap = dir.max_l1;
    dir.generate = [base, cap](double t, RngStream&) {
        double rho = t * cap;
        return std::make_tuple(transport_alternative(base, rho), base, rho);
    };
    return dir;
}

// Scales the adversarial prior's eps_star by t / draw; the reported L1 is
// recomputed per draw, not inferred from t.
inline Direction adversarial_direction(const AdversarialPrior& prior, double max_scale = 1.0) {
    Direction dir;
    dir.name = "adversarial-eps";
    dir.max_l1 = max_scale;  // nominal; actual distances come from the draws
    dir.generate = [prior, max_scale](double t, RngStream& rng) {
        PriorDraw draw = sample_alt(prior, rng, t * max_scale);
        return std::make_tuple(draw.p_tilde, draw.q_tilde, draw.l1_distance);
    };
    return dir;
}

struct SeparationEstimate {
    std::optional<double> rho_hat;  // empty when risk stays above gamma at t = 1
    double gamma = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};  // L1 distances
    int n_trials_per_eval = 0;
};

// Bisects the direction scale for the smallest L1 distance at which the
// estimated risk (type I + type II) drops to gamma. 12 bisection steps;
// Monte Carlo noise dominates beyond that.
inline SeparationEstimate empirical_separation(const TestConstants& constants,
                                               const DiscreteDistribution& pi, long long k,
                                               double gamma, const Direction& direction,
                                               int n_trials_per_eval, RngStream& rng) {
    if (n_trials_per_eval < 400) {
        throw BudgetTooSmallError("empirical_separation: need >= 400 trials per evaluation");
    }
    SeparationEstimate est;
    est.gamma = gamma;
    est.n_trials_per_eval = n_trials_per_eval;
    if (gamma >= 1.0) {
        est.rho_hat = 0.0;
        return est;
    }

    PairGenerator null_gen = fixed_pair(pi, pi);
    int eval_counter = 0;
    auto risk_and_l1 = [&](double t) {
        RngStream eval_rng = rng.substream(1000 + static_cast<std::uint64_t>(eval_counter++));
        KahanSum l1_acc;
        int gen_count = 0;
        PairGenerator alt_gen = [&](RngStream& trial_rng) {
            auto [p, q, l1] = direction.generate(t, trial_rng);
            l1_acc.add(l1);
            ++gen_count;
            return std::make_pair(p, q);
        };
        RiskEstimate r = estimate_risk(constants, null_gen, alt_gen, k, n_trials_per_eval,
                                       eval_rng);
        double mean_l1 = gen_count > 0 ? l1_acc.value() / gen_count : 0.0;
        return std::make_pair(r.type1 + r.type2, mean_l1);
    };

    auto [risk_hi, l1_hi] = risk_and_l1(1.0);
    if (risk_hi > gamma) {
        est.bracket = {l1_hi, l1_hi};
        return est;  // unreachable at this budget
    }
    double lo = 0.0, hi = 1.0;
    double lo_l1 = 0.0, hi_l1 = l1_hi;
    for (int step = 0; step < 12; ++step) {
        double mid = 0.5 * (lo + hi);
        auto [risk_mid, l1_mid] = risk_and_l1(mid);
        if (risk_mid <= gamma) {
            hi = mid;
            hi_l1 = l1_mid;
        } else {
            lo = mid;
            lo_l1 = l1_mid;
        }
    }
    est.bracket = {lo_l1, hi_l1};
    est.rho_hat = hi_l1;
    return est;
}

struct ReportOptions {
    double u = 0.5;
    double v = 0.001;
    bool with_separation = false;
    int n_trials_per_eval = 400;
};

// Side-by-side rate comparison for one (pi, k): the four closed-form rates,
// the regime decomposition, and optionally an empirical separation search
// with the supplied calibrated constants.
struct CompareReport {
    long long d = 0;
    long long k = 0;
    double gamma = 0.0;
    RateBreakdown upper;
    RateBreakdown lower;
    RateBreakdown identity;
    RateBreakdown dk16;
    RegimeTable regimes;
    std::optional<SeparationEstimate> separation;
};

inline CompareReport compare_report(const DiscreteDistribution& pi, long long k, double gamma,
                                    const TestConstants* constants, const ReportOptions& options,
                                    RngStream& rng) {
    CompareReport rep;
    rep.d = static_cast<long long>(pi.size());
    rep.k = k;
    rep.gamma = gamma;
    rep.upper = upper_rate(pi, k, options.u);
    rep.lower = lower_rate(pi, k, options.v);
    rep.identity = identity_rate(pi, k);
    rep.dk16 = dk16_rate(pi, k);
    rep.regimes = regime_table(pi, k);
    if (options.with_separation && constants != nullptr) {
        Direction dir = tail_transport_direction(pi);
        rep.separation = empirical_separation(*constants, pi, k, gamma, dir,
                                              options.n_trials_per_eval, rng);
    }
    return rep;
}

}  // namespace closetest
