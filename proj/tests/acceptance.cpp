// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qot/cli.hpp"
#include "support/brute_force.hpp"

namespace {

using namespace qot;
using harness::ExperimentConfig;
using harness::Json;

// Pinned tolerances.
constexpr double kBoundRelError = 1e-12;
constexpr double kFormulaAbsError = 1e-12;
constexpr double kSigmas = 3.0;
constexpr double kCoinLow = 0.49;
constexpr double kCoinHigh = 0.51;
constexpr double kPostponeCeiling = 1e-3;

struct Check {
    bool ok = true;
    std::ostringstream why;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            if (why.tellp() > 0) why << "; ";
            why << what;
            ok = false;
        }
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// |rate - p| <= 3 sqrt(p(1-p)/T).
bool within_sigmas(std::uint64_t hits, std::uint64_t trials, double p, std::string& note) {
    const double rate = static_cast<double>(hits) / static_cast<double>(trials);
    const double tol = kSigmas * stats::sampling_sigma(p, trials);
    note = fmt(rate) + " vs " + fmt(p) + " +/- " + fmt(tol);
    return std::abs(rate - p) <= tol;
}

ExperimentConfig experiment(std::int64_t n, std::int64_t m, std::int64_t N, std::uint64_t trials, std::uint64_t seed,
                            adversary::Strategy strategy) {
    ExperimentConfig c;
    c.n = n;
    c.m = m;
    c.N = N;
    c.trials = trials;
    c.seed = seed;
    c.strategy = strategy;
    return c;
}

std::pair<int, std::string> cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str()};
}

// 1
void bound_reproduction(Check& c) {
    const auto [code, out] = cli({"bounds", "--n", "2", "--m", "1", "--N", "18"});
    c.expect(code == cli::kOk, "exit code " + std::to_string(code));
    const auto j = Json::parse(out);
    c.expect(j["privacy_bound_form"] == "2*exp(-N/18)", "form " + j["privacy_bound_form"].dump());
    const double v = j["privacy_hoeffding_bound"].get<double>();
    const double want = 2.0 / std::exp(1.0);
    c.expect(std::abs(v - want) / want <= kBoundRelError, "value " + fmt(v));
    const auto [code2, out2] = cli({"bounds", "--n", "2", "--m", "1"});
    c.expect(code2 == cli::kOk && Json::parse(out2)["privacy_bound_form"] == "2*exp(-N/18)",
             "form without --N");
    c.why << (c.ok ? "2*exp(-N/18) = " + fmt(v) : "");
}

// 2
void formula_suite(Check& c) {
    c.expect(compute_x(4, 1, 40) == 8, "x(4,1,40)");
    c.expect(compute_x(2, 1, 6) == 2, "x(2,1,6)");
    for (std::int64_t N : {1, 2, 3, 6, 7, 100}) c.expect(compute_x(3, 1, N) == 0, "x(3,1," + std::to_string(N) + ")");
    c.expect(target_rate(2, 1) == Rational(3, 4), "target_rate(2,1)");
    c.expect(target_rate(4, 1) == Rational(3, 8), "target_rate(4,1)");
    c.expect(target_rate(3, 1) == Rational(1, 2), "target_rate(3,1)");
    c.expect(correctness_epsilon(2, 1).delta == Rational(1, 6), "delta_c(2,1)");
    c.expect(privacy_epsilon(2, 1).delta == Rational(1, 6), "delta_p(2,1)");
    c.expect(min_N(Rational(1, 6)) == 25, "min_N(1/6)");
    const auto b = commitment_attack_bound(0.5, 4, 40, 8);
    c.expect(std::abs(b.bound - std::pow(0.5, 8)) <= kFormulaAbsError, "commitment bound " + fmt(b.bound));
    c.expect(std::abs(correctness_epsilon(2, 1).epsilon - std::exp(-1.0 / 36)) <= kFormulaAbsError, "eps_c(2,1)");
    if (c.ok) c.why << "x, rates, deviations, min_N and p^8 as tabulated";
}

// 3
void channel_invariant(Check& c) {
    constexpr int kPhotons = 100000;
    RandomSource rng(2024, "acceptance-channel");
    int same_agree = 0;
    int cross_agree = 0;
    for (int i = 0; i < kPhotons; ++i) {
        const Bit r = rng.bit();
        const channel::Basis basis = channel::basis_from_bit(rng.bit());
        auto a = channel::encode(r, basis);
        same_agree += channel::measure(a, basis, rng) == r;
        auto b = channel::encode(r, basis);
        const channel::Basis other = channel::conjugate(basis);
        cross_agree += channel::measure(b, other, rng) == r;
    }
    const double same = same_agree / static_cast<double>(kPhotons);
    const double cross = cross_agree / static_cast<double>(kPhotons);
    c.expect(same == 1.0, "matching agreement " + fmt(same));
    c.expect(cross >= kCoinLow && cross <= kCoinHigh, "mismatched agreement " + fmt(cross));
    if (c.ok) c.why << "matching 1, mismatched " << fmt(cross);
}

// 4
void honest_correctness(Check& c) {
    struct Case {
        std::int64_t n, m, N;
    };
    for (auto k : {Case{3, 1, 6}, Case{4, 1, 40}}) {
        const auto cfg = experiment(k.n, k.m, k.N, 100000, 4, adversary::Strategy::honest());
        const auto params = harness::resolve_params(cfg);
        const auto s = harness::run_experiment(cfg);
        const double oracle = oracle::exact_failure_oracle(params, oracle::Event::Correctness).value;
        std::string note;
        const std::string tag = "(" + std::to_string(k.n) + "," + std::to_string(k.m) + "," + std::to_string(k.N) + ")";
        c.expect(within_sigmas(s.aborts(), s.trials, oracle, note), tag + " abort " + note);
        c.expect(s.wrong_decodes == 0, tag + " wrong decodes " + std::to_string(s.wrong_decodes));
        c.expect(s.caught == 0, tag + " honest Bob caught");
        if (c.ok) c.why << (k.N == 6 ? "" : "; ") << tag << " abort " << note;
    }
    const auto cfg = experiment(3, 1, 6, 1, 4, adversary::Strategy::honest());
    c.expect(oracle::exact_failure_oracle(harness::resolve_params(cfg), oracle::Event::Correctness).exact ==
                 oracle::BigRational(7, 64),
             "oracle (3,1,6) != 7/64");
    c.expect(oracle::exact_failure_oracle(validate_params(4, 1, 40), oracle::Event::Correctness).exact ==
                 oracle::binomial_cdf_half(40, 15),
             "oracle (4,1,40) != P[M<=15]");
}

// 5
void brute_force_equivalence(Check& c) {
    int sets = 0;
    for (std::int64_t n = 2; n <= 20; ++n) {
        for (std::int64_t m = 1; m < n; ++m) {
            for (std::int64_t N = 1; N <= 20; ++N) {
                if (!is_admissible(n, m, N)) continue;
                const auto params = validate_params(n, m, N);
                std::vector<oracle::Event> events{oracle::Event::Correctness, oracle::Event::PrivacyGreedy};
                if (params.rate_case == RateCase::Low) events.push_back(oracle::Event::DishonestRemoval);
                for (auto e : events) {
                    const auto exact = oracle::exact_failure_oracle(params, e).exact;
                    const auto brute = testing::brute_force_probability(params, e);
                    c.expect(exact == brute, "(" + std::to_string(n) + "," + std::to_string(m) + "," +
                                                 std::to_string(N) + ") " + oracle::to_string(e));
                }
                ++sets;
            }
        }
    }
    if (c.ok) c.why << sets << " admissible parameter sets";
}

// 6
void bound_dominance(Check& c) {
    int points = 0;
    for (std::int64_t n = 2; n <= 8; ++n) {
        for (std::int64_t m = 1; m < n; ++m) {
            const auto dc = correctness_epsilon(n, m);
            const auto dp = privacy_epsilon(n, m);
            for (std::int64_t N = 1; N <= 600; ++N) {
                if (!is_admissible(n, m, N)) continue;
                const auto params = validate_params(n, m, N);
                const std::string tag =
                    "(" + std::to_string(n) + "," + std::to_string(m) + "," + std::to_string(N) + ")";
                if (N >= min_N(dc.delta)) {
                    const double pc = oracle::exact_failure_oracle(params, oracle::Event::Correctness).value;
                    c.expect(pc <= dc.hoeffding(N), tag + " correctness vs Hoeffding");
                    c.expect(pc <= dc.epsilon_pow(N), tag + " correctness vs eps^N");
                    ++points;
                }
                if (N >= min_N(dp.delta)) {
                    const double pp = oracle::exact_failure_oracle(params, oracle::Event::PrivacyGreedy).value;
                    c.expect(pp <= dp.hoeffding(N), tag + " privacy vs Hoeffding");
                    c.expect(pp <= dp.epsilon_pow(N), tag + " privacy vs eps^N");
                    ++points;
                }
            }
        }
    }
    if (c.ok) c.why << points << " (parameter set, event) points";
}

// 7
void greedy_privacy(Check& c) {
    const auto params = validate_params(2, 1, 6);
    const auto exact = oracle::exact_failure_oracle(params, oracle::Event::PrivacyGreedy);
    c.expect(exact.exact == testing::brute_force_probability(params, oracle::Event::PrivacyGreedy),
             "oracle disagrees with enumeration");
    c.expect(exact.exact == oracle::BigRational(15, 64), "enumeration gives " + exact.exact_string());
    const auto s = harness::run_experiment(
        experiment(2, 1, 6, 100000, 7, adversary::Strategy::of(adversary::StrategyKind::GreedyBob)));
    std::string note;
    c.expect(within_sigmas(s.successes, s.trials, exact.value, note), "success " + note);
    const double eps = privacy_epsilon(2, 1).epsilon_pow(6);
    c.expect(s.success_rate() <= eps, "success " + fmt(s.success_rate()) + " > eps_p^N " + fmt(eps));
    c.expect(s.caught == 0, "greedy Bob caught");

    // A second admissible N, at and above the minimum.
    const auto big = harness::run_experiment(
        experiment(2, 1, 27, 20000, 7, adversary::Strategy::of(adversary::StrategyKind::GreedyBob)));
    const double eps27 = privacy_epsilon(2, 1).epsilon_pow(27);
    c.expect(big.success_rate() <= eps27, "N=27 success " + fmt(big.success_rate()) + " > " + fmt(eps27));
    if (c.ok) c.why << "15/64 confirmed; success " << note << "; <= eps_p^N at N=6 and N=27";
}

// 8
void postpone_detection(Check& c) {
    const auto postpone = adversary::Strategy::of(adversary::StrategyKind::PostponeBob);
    const auto small = harness::run_experiment(experiment(2, 1, 6, 100000, 8, postpone));
    std::string note;
    c.expect(within_sigmas(small.trials - small.caught, small.trials, std::pow(0.75, 6), note), "N=6 survival " + note);
    const auto large = harness::run_experiment(experiment(4, 1, 40, 100000, 8, postpone));
    const double survival = large.survival_rate();
    c.expect(survival < kPostponeCeiling, "N=40 survival " + fmt(survival));
    if (c.ok) c.why << "N=6 survival " << note << "; N=40 survival " << fmt(survival);
}

// 9
void commit_cheat(Check& c) {
    const auto params = validate_params(4, 1, 40);
    c.expect(params.x == 8, "x != 8");
    const auto s = harness::run_experiment(experiment(4, 1, 40, 1000000, 9, adversary::Strategy::commit_cheat(0.5)));
    std::string note;
    c.expect(within_sigmas(s.successes, s.trials, std::pow(0.5, 8), note), "success " + note);
    const auto b = commitment_attack_bound(0.5, 4, 40, 8);
    c.expect(b.bound < b.epsilon_pow_N, "p^((N-x)/n) " + fmt(b.bound) + " not < " + fmt(b.epsilon_pow_N));
    if (c.ok) c.why << "success " << note << "; " << fmt(b.bound) << " < " << fmt(b.epsilon_pow_N);
}

// 10
void privacy_for_bob(Check& c) {
    const auto params = validate_params(3, 1, 6);
    const auto honest = harness::privacy_independence_test(params, 20000, 10, false);
    const auto leaky = harness::privacy_independence_test(params, 20000, 10, true);
    c.expect(honest.min_p_value > honest.corrected_alpha,
             "honest min p " + fmt(honest.min_p_value) + " <= " + fmt(honest.corrected_alpha));
    c.expect(leaky.min_p_value < 1e-6, "leaky control min p " + fmt(leaky.min_p_value));
    if (c.ok)
        c.why << "honest min p " << fmt(honest.min_p_value) << " > " << fmt(honest.corrected_alpha)
              << "; leaky min p " << fmt(leaky.min_p_value);
}

// 11
void determinism(Check& c) {
    const std::vector<std::vector<std::string>> commands{
        {"bounds", "--n", "4", "--m", "1", "--p", "0.5"},
        {"run", "--n", "3", "--m", "1", "--N", "6", "--trials", "20000", "--seed", "11"},
        {"run", "--n", "3", "--m", "1", "--N", "6", "--trials", "5000", "--seed", "11", "--format", "table"},
        {"attack", "--strategy", "greedy", "--n", "2", "--m", "1", "--N", "6", "--trials", "20000", "--seed", "11"},
        {"attack", "--strategy", "dishonest-removal", "--n", "4", "--m", "1", "--N", "40", "--trials", "2000",
         "--seed", "11"},
        {"attack", "--strategy", "postpone", "--n", "2", "--m", "1", "--N", "6", "--trials", "5000", "--seed", "11"},
        {"attack", "--strategy", "commit-cheat", "--p", "0.5", "--n", "4", "--m", "1", "--N", "40", "--trials", "2000",
         "--seed", "11"},
        {"attack", "--strategy", "curious-alice", "--n", "3", "--m", "1", "--N", "6", "--trials", "5000", "--seed",
         "11"},
        {"privacy-test", "--n", "3", "--m", "1", "--N", "6", "--trials-per-choice", "2000", "--seed", "11"},
        {"oracle", "--n", "4", "--m", "1", "--N", "40", "--event", "privacy"},
    };
    for (const auto& args : commands) {
        const auto a = cli(args);
        const auto b = cli(args);
        c.expect(!a.second.empty() && a == b, "differs: " + args[0] + " " + args[1] + " " + args[2]);
    }
    if (c.ok) c.why << commands.size() << " commands byte-identical";
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Check&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "bound reproduction", 1, bound_reproduction},
        {2, "formula suite", 1, formula_suite},
        {3, "channel invariant", 5, channel_invariant},
        {4, "honest correctness vs oracle", 60, honest_correctness},
        {5, "oracle brute-force equivalence", 60, brute_force_equivalence},
        {6, "bound dominance", 5, bound_dominance},
        {7, "greedy Bob privacy", 60, greedy_privacy},
        {8, "postponing Bob detection", 60, postpone_detection},
        {9, "commitment-cheating Bob", 120, commit_cheat},
        {10, "privacy for Bob", 120, privacy_for_bob},
        {11, "determinism", 10, determinism},
    };
    int failures = 0;
    for (const auto& cr : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > cr.budget_seconds) check.expect(false, "took " + fmt(secs) + " s, budget " + fmt(cr.budget_seconds));
        failures += !check.ok;
        std::printf("%s %2d %-32s %7.2fs  %s\n", check.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                    check.why.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
