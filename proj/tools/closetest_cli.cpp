// Command-line front end: closeness testing, calibration, rate reports and
// adversarial-prior tooling over JSON/CSV files.

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "closetest/adversarial.hpp"
#include "closetest/distmodel.hpp"
#include "closetest/harness.hpp"
#include "closetest/io.hpp"
#include "closetest/rates.hpp"
#include "closetest/rng.hpp"
#include "closetest/sampling.hpp"
#include "closetest/testers.hpp"

namespace {

using namespace closetest;

struct GlobalOpts {
    std::uint64_t seed = 0;
    std::string format = "json";
    std::string out;
};

void emit(const GlobalOpts& g, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream f(g.out);
        if (!f) throw BadParameterError("cannot open output file: " + g.out);
        f << text << "\n";
    }
}

// --dist accepts a file path or a preset: uniform:D, zipf:D:S,
// two-spike:K:H, two-level:D.
DiscreteDistribution resolve_dist(const std::string& spec) {
    auto split = [](const std::string& s) {
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = s.find(':', start);
            parts.push_back(s.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return parts;
    };
    auto parts = split(spec);
    const std::string& head = parts[0];
    if (head == "uniform" && parts.size() == 2) return family_uniform(std::stoi(parts[1]));
    if (head == "zipf" && parts.size() == 3) {
        return family_zipf(std::stoi(parts[1]), std::stod(parts[2]));
    }
    if (head == "two-spike" && parts.size() == 3) {
        return family_two_spike(std::stoll(parts[1]), std::stod(parts[2]));
    }
    if (head == "two-level" && parts.size() == 2) return family_two_level(std::stoi(parts[1]));
    return read_distribution_file(spec);
}

TestConstants load_constants(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadParameterError("cannot open constants file: " + path);
    json j;
    in >> j;
    return constants_from_json(j);
}

std::vector<int> counts_to_observations(const std::vector<long long>& counts) {
    std::vector<int> obs;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        for (long long r = 0; r < counts[i]; ++r) obs.push_back(static_cast<int>(i));
    }
    return obs;
}

std::vector<int> read_raw_sample(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw BadParameterError("cannot open sample file: " + path);
    std::vector<int> obs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int v = std::stoi(line);
        if (v < 0) throw NegativeEntryError("category ids must be >= 0: " + path);
        obs.push_back(v);
    }
    if (obs.empty()) throw EmptyVectorError("sample file is empty: " + path);
    return obs;
}

std::string key_value_csv(const json& j) {
    std::ostringstream os;
    os.precision(17);
    os << "key,value\n";
    std::function<void(const std::string&, const json&)> walk = [&](const std::string& prefix,
                                                                    const json& node) {
        if (node.is_object()) {
            for (auto it = node.begin(); it != node.end(); ++it) {
                walk(prefix.empty() ? it.key() : prefix + "." + it.key(), it.value());
            }
        } else if (node.is_array()) {
            for (std::size_t i = 0; i < node.size(); ++i) {
                walk(prefix + "[" + std::to_string(i) + "]", node[i]);
            }
        } else {
            os << prefix << "," << node.dump() << "\n";
        }
    };
    walk("", j);
    return os.str();
}

void emit_json(const GlobalOpts& g, const json& j) {
    if (g.format == "csv") {
        emit(g, key_value_csv(j));
    } else {
        emit(g, j.dump(2));
    }
}

int run_test(const GlobalOpts& g, const std::string& x_path, const std::string& y_path,
             bool raw, long long k_opt, const std::string& constants_path) {
    TestConstants tc = load_constants(constants_path);
    std::vector<int> xs, ys;
    std::size_t d = 0;
    if (raw) {
        xs = read_raw_sample(x_path);
        ys = read_raw_sample(y_path);
        int max_cat = 0;
        for (int v : xs) max_cat = std::max(max_cat, v);
        for (int v : ys) max_cat = std::max(max_cat, v);
        d = static_cast<std::size_t>(max_cat) + 1;
    } else {
        auto cx = read_count_file(x_path);
        auto cy = read_count_file(y_path);
        if (cx.size() != cy.size()) {
            throw DimensionMismatchError("count files disagree on the support size");
        }
        d = cx.size();
        xs = counts_to_observations(cx);
        ys = counts_to_observations(cy);
    }
    long long k = k_opt > 0 ? k_opt
                            : static_cast<long long>(std::min(xs.size(), ys.size()));
    RngStream rng(g.seed);
    SplitCounts counts = split_and_poissonize(xs, ys, k, rng, d);
    TestReport rep = combined_test(counts, tc);
    json j = to_json(rep, tc);
    j["truncated"] = counts.truncated;
    emit_json(g, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local minimax two-sample closeness testing toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // let --seed/--format/--out appear after the subcommand

    GlobalOpts g;
    app.add_option("--seed", g.seed, "64-bit RNG seed")->capture_default_str();
    app.add_option("--format", g.format, "Output format: json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_option("--out", g.out, "Write output to this path instead of stdout");

    // test
    auto* cmd_test = app.add_subcommand("test", "Run the combined test on two samples");
    std::string x_path, y_path, constants_path;
    bool raw = false;
    long long k_opt = 0;
    cmd_test->add_option("--x", x_path, "Counts (or raw sample) file for the X sample")
        ->required();
    cmd_test->add_option("--y", y_path, "Counts (or raw sample) file for the Y sample")
        ->required();
    cmd_test->add_flag("--raw", raw, "Inputs are raw category-per-line samples, 0-based");
    cmd_test->add_option("--k", k_opt, "Sample size (defaults to the observation count)");
    cmd_test->add_option("--constants-file", constants_path, "Calibrated constants JSON")
        ->required();

    // calibrate
    auto* cmd_cal = app.add_subcommand("calibrate", "Monte Carlo calibration of multipliers");
    double gamma = 0.1;
    long long k_cal = 3000;
    int d_cal = 50;
    int trials = 2000;
    cmd_cal->add_option("--gamma", gamma, "Target level in (0,1)")->capture_default_str();
    cmd_cal->add_option("--k", k_cal, "Sample size")->capture_default_str();
    cmd_cal->add_option("--d", d_cal, "Support size of the calibration suite")
        ->capture_default_str();
    cmd_cal->add_option("--trials", trials, "Monte Carlo trials per suite member")
        ->capture_default_str();

    // rates
    auto* cmd_rates = app.add_subcommand("rates", "Closed-form separation-rate calculators");
    std::string dist_spec;
    long long k_rates = 256;
    double u = 0.5, v = 0.001;
    cmd_rates->add_option("--dist", dist_spec, "Distribution file or preset")->required();
    cmd_rates->add_option("--k", k_rates, "Sample size")->capture_default_str();
    cmd_rates->add_option("--u", u, "Upper-bound exponent scale")->capture_default_str();
    cmd_rates->add_option("--v", v, "Lower-bound slack parameter")->capture_default_str();

    // simulate
    auto* cmd_sim = app.add_subcommand("simulate", "Monte Carlo risk estimation");
    std::string sim_dist, sim_constants;
    long long k_sim = 3000;
    int sim_trials = 1000;
    double alt_l1 = 0.0;
    cmd_sim->add_option("--dist", sim_dist, "Null distribution file or preset")->required();
    cmd_sim->add_option("--constants-file", sim_constants, "Calibrated constants JSON")
        ->required();
    cmd_sim->add_option("--k", k_sim, "Sample size")->capture_default_str();
    cmd_sim->add_option("--trials", sim_trials, "Trials per error type")->capture_default_str();
    cmd_sim->add_option("--alt-l1", alt_l1,
                        "L1 distance of the tail-transport alternative (0 = null pair)")
        ->capture_default_str();

    // separation
    auto* cmd_sep = app.add_subcommand("separation", "Empirical separation-distance search");
    std::string sep_dist, sep_constants, direction = "transport";
    long long k_sep = 3000;
    double gamma_sep = 0.1;
    int trials_per_eval = 400;
    cmd_sep->add_option("--dist", sep_dist, "Distribution file or preset")->required();
    cmd_sep->add_option("--constants-file", sep_constants, "Calibrated constants JSON")
        ->required();
    cmd_sep->add_option("--k", k_sep, "Sample size")->capture_default_str();
    cmd_sep->add_option("--gamma", gamma_sep, "Risk level to bracket")->capture_default_str();
    cmd_sep->add_option("--trials-per-eval", trials_per_eval, "Trials per bisection step")
        ->capture_default_str();
    cmd_sep->add_option("--direction", direction, "Perturbation family")
        ->check(CLI::IsMember({"transport", "adversarial"}))
        ->capture_default_str();

    // adversarial
    auto* cmd_adv = app.add_subcommand("adversarial", "Build or sample lower-bound priors");
    std::string adv_dist, sample_mode;
    long long k_adv = 256, m_adv = 2;
    double u_adv = 0.1, v_adv = 0.001, a_adv = 3.0, delta_adv = 0.125, gamma_lb = 0.05;
    int n_draws = 0;
    cmd_adv->add_option("--dist", adv_dist, "Distribution file or preset")->required();
    cmd_adv->add_option("--k", k_adv, "Sample size")->capture_default_str();
    cmd_adv->add_option("--u", u_adv, "Perturbation size parameter, (0, 1/2]")
        ->capture_default_str();
    cmd_adv->add_option("--v", v_adv, "Exponent slack")->capture_default_str();
    cmd_adv->add_option("--M", m_adv, "Level thinning factor")->capture_default_str();
    cmd_adv->add_option("--a", a_adv, "Level-size cutoff multiplier (> 2)")
        ->capture_default_str();
    cmd_adv->add_option("--delta", delta_adv, "Failure budget, (0, 1/8]")->capture_default_str();
    cmd_adv->add_option("--gamma-lb", gamma_lb, "Construction level parameter")
        ->capture_default_str();
    cmd_adv->add_option("--sample", sample_mode, "Also emit draws: null, alt or smalltail")
        ->check(CLI::IsMember({"null", "alt", "smalltail"}));
    cmd_adv->add_option("--draws", n_draws, "Number of draws to emit")->capture_default_str();

    // report
    auto* cmd_rep = app.add_subcommand("report", "Side-by-side rate comparison report");
    std::string rep_dist, rep_preset, rep_constants;
    long long k_rep = 256;
    double gamma_rep = 0.1;
    bool with_separation = false;
    int rep_trials = 400;
    cmd_rep->add_option("--dist", rep_dist, "Distribution file or preset");
    cmd_rep->add_option("--preset", rep_preset, "Named preset: two-spike")
        ->check(CLI::IsMember({"two-spike"}));
    cmd_rep->add_option("--k", k_rep, "Sample size")->capture_default_str();
    cmd_rep->add_option("--gamma", gamma_rep, "Risk level")->capture_default_str();
    cmd_rep->add_option("--constants-file", rep_constants,
                        "Calibrated constants JSON (enables --with-separation)");
    cmd_rep->add_flag("--with-separation", with_separation,
                      "Include the empirical separation search");
    cmd_rep->add_option("--trials-per-eval", rep_trials, "Trials per bisection step")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1, --help exits 0
    }

    try {
        if (cmd_test->parsed()) {
            return run_test(g, x_path, y_path, raw, k_opt, constants_path);
        }
        if (cmd_cal->parsed()) {
            RngStream rng(g.seed);
            auto suite = default_calibration_suite(d_cal);
            auto tc = calibrate_constants(suite, k_cal, gamma, trials, rng);
            json j = to_json(tc);
            j["k"] = k_cal;
            j["d"] = d_cal;
            j["trials"] = trials;
            j["seed"] = g.seed;
            emit_json(g, j);
            return 0;
        }
        if (cmd_rates->parsed()) {
            auto pi = resolve_dist(dist_spec);
            json j{{"d", pi.size()},
                   {"k", k_rates},
                   {"upper", to_json(upper_rate(pi, k_rates, u))},
                   {"lower", to_json(lower_rate(pi, k_rates, v))},
                   {"identity", to_json(identity_rate(pi, k_rates))},
                   {"dk16", to_json(dk16_rate(pi, k_rates))}};
            emit_json(g, j);
            return 0;
        }
        if (cmd_sim->parsed()) {
            auto pi = resolve_dist(sim_dist);
            auto tc = load_constants(sim_constants);
            RngStream rng(g.seed);
            auto alt = alt_l1 > 0.0 ? transport_alternative(pi, alt_l1) : pi;
            auto est = estimate_risk(tc, fixed_pair(pi, pi), fixed_pair(alt, pi), k_sim,
                                     sim_trials, rng);
            json j = to_json(est);
            j["alt_l1"] = alt_l1;
            emit_json(g, j);
            return 0;
        }
        if (cmd_sep->parsed()) {
            auto pi = resolve_dist(sep_dist);
            auto tc = load_constants(sep_constants);
            RngStream rng(g.seed);
            Direction dir = direction == "adversarial"
                                ? adversarial_direction(build_prior(pi, k_sep), 8.0)
                                : tail_transport_direction(pi);
            auto est = empirical_separation(tc, pi, k_sep, gamma_sep, dir, trials_per_eval, rng);
            json j = to_json(est);
            j["direction"] = dir.name;
            emit_json(g, j);
            return 0;
        }
        if (cmd_adv->parsed()) {
            auto pi = resolve_dist(adv_dist);
            auto prior = build_prior(pi, k_adv, u_adv, v_adv, m_adv, a_adv, delta_adv, gamma_lb);
            if (!prior.m_meets_bound) {
                std::cerr << "warning: M below the concentration bound; "
                             "P_pi membership is only checked empirically\n";
            }
            json j = to_json(prior);
            if (!sample_mode.empty() && n_draws > 0) {
                RngStream rng(g.seed);
                json draws = json::array();
                for (int t = 0; t < n_draws; ++t) {
                    RngStream sub = rng.substream(t);
                    PriorDraw draw = sample_mode == "null" ? sample_null(prior, sub)
                                     : sample_mode == "alt"
                                         ? sample_alt(prior, sub)
                                         : sample_alt_smalltail(prior, sub);
                    draws.push_back(to_json(draw));
                }
                j["draws"] = draws;
                j["draw_mode"] = sample_mode;
            }
            emit_json(g, j);
            return 0;
        }
        if (cmd_rep->parsed()) {
            DiscreteDistribution pi;
            long long k = k_rep;
            if (rep_preset == "two-spike") {
                pi = family_two_spike(10, 0.3);
                k = 10;
            } else if (!rep_dist.empty()) {
                pi = resolve_dist(rep_dist);
            } else {
                std::cerr << "report: need --dist or --preset\n";
                return 1;
            }
            std::optional<TestConstants> tc;
            if (!rep_constants.empty()) tc = load_constants(rep_constants);
            ReportOptions opt;
            opt.with_separation = with_separation && tc.has_value();
            opt.n_trials_per_eval = rep_trials;
            RngStream rng(g.seed);
            auto rep = compare_report(pi, k, gamma_rep, tc ? &*tc : nullptr, opt, rng);
            if (g.format == "csv") {
                emit(g, compare_report_to_csv(rep));
            } else {
                emit(g, to_json(rep).dump(2));
            }
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
