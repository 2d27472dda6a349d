// harness.hpp
// Monte Carlo runner, verdicts against the exact oracles and the analytic
// bounds, the choice-independence test and report emission.

#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qot/adversary.hpp"
#include "qot/oracle.hpp"
#include "qot/params.hpp"
#include "qot/stats.hpp"

namespace qot::harness {

using adversary::Strategy;
using adversary::StrategyKind;
using protocol::Json;
using protocol::Status;

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
    std::int64_t n = 2;
    std::int64_t m = 1;
    std::optional<std::int64_t> N;
    std::optional<std::int64_t> auto_N_floor;  // smallest admissible N at or above this
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    Strategy strategy;
    std::optional<std::vector<Bit>> bits;              // fixed inputs, else random per trial
    std::optional<std::vector<std::size_t>> choices;   // fixed zero-based labels, else random
};

// Resolves N and checks everything that can be checked before a trial runs.
inline ProtocolParams resolve_params(const ExperimentConfig& config) {
    if (config.trials < 1) throw std::invalid_argument("trials must be at least 1");
    if (config.N && config.auto_N_floor) throw std::invalid_argument("give either N or an auto-N floor, not both");
    qot::detail::require_choice_count(config.n, config.m);
    std::int64_t N = 0;
    if (config.N) {
        N = *config.N;
    } else if (config.auto_N_floor) {
        N = smallest_valid_N(config.n, config.m, *config.auto_N_floor);
    } else {
        throw std::invalid_argument("N is required (or an auto-N floor)");
    }
    const ProtocolParams params = validate_params(config.n, config.m, N);
    if (config.bits && static_cast<std::int64_t>(config.bits->size()) != params.n)
        throw std::invalid_argument("expected " + std::to_string(params.n) + " input bits");
    if (config.bits)
        for (Bit b : *config.bits)
            if (b > 1) throw std::invalid_argument("input bits must be 0 or 1");
    if (config.choices) (void)protocol::ChoiceVector::from_zero_based(*config.choices, params.n, params.m);
    if (config.strategy.kind == StrategyKind::DishonestRemovalBob && params.rate_case != RateCase::Low)
        throw std::invalid_argument("dishonest-removal applies to the low-rate case (2m+1 < n) only");
    if (config.strategy.kind == StrategyKind::CommitCheatBob) {
        if (!config.strategy.p) throw std::invalid_argument("commit-cheat needs --p");
        commitment::CheatModel check(*config.strategy.p);
        (void)check;
    }
    return params;
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateStats {
    Strategy strategy;
    std::uint64_t trials = 0;
    std::uint64_t completed = 0;
    std::array<std::uint64_t, 4> by_status{};  // indexed by Status
    std::uint64_t wrong_decodes = 0;           // Completed but some chosen bit wrong
    std::uint64_t caught = 0;
    std::uint64_t successes = 0;
    std::uint64_t target_exceeded = 0;
    std::uint64_t family_announced = 0;
    std::uint64_t baseline_correct = 0;        // uniform guesser, counted like successes
    std::uint64_t forgeries = 0;
    std::uint64_t bits_learned = 0;

    std::uint64_t aborts() const noexcept { return trials - completed; }
    // Aborts count as correctness failures.
    std::uint64_t correctness_failures() const noexcept { return aborts() + wrong_decodes; }
    std::uint64_t count(Status s) const noexcept { return by_status[static_cast<std::size_t>(s)]; }

    static double rate(std::uint64_t k, std::uint64_t n) {
        return n == 0 ? 0.0 : static_cast<double>(k) / static_cast<double>(n);
    }
    double abort_rate() const { return rate(aborts(), trials); }
    double success_rate() const { return rate(successes, trials); }
    double caught_rate() const { return rate(caught, trials); }
    double survival_rate() const { return rate(trials - caught, trials); }

    void add(const adversary::AdversarialOutcome& o, bool baseline_hit) {
        ++trials;
        ++by_status[static_cast<std::size_t>(o.status)];
        if (o.status == Status::Completed) {
            ++completed;
            const bool honest_like = strategy.kind == StrategyKind::HonestBob ||
                                     strategy.kind == StrategyKind::LeakyBob ||
                                     strategy.kind == StrategyKind::CuriousAlice;
            if (honest_like && !o.decoded_correctly) ++wrong_decodes;
        }
        if (o.caught) ++caught;
        if (o.success) ++successes;
        if (o.target_exceeded) ++target_exceeded;
        if (o.family_announced) ++family_announced;
        if (baseline_hit) ++baseline_correct;
        forgeries += o.forgeries;
        bits_learned += o.bits_learned;
    }

    // Counts are sums, so merging is order independent.
    void merge(const AggregateStats& other) {
        trials += other.trials;
        completed += other.completed;
        for (std::size_t i = 0; i < by_status.size(); ++i) by_status[i] += other.by_status[i];
        wrong_decodes += other.wrong_decodes;
        caught += other.caught;
        successes += other.successes;
        target_exceeded += other.target_exceeded;
        family_announced += other.family_announced;
        baseline_correct += other.baseline_correct;
        forgeries += other.forgeries;
        bits_learned += other.bits_learned;
    }

    friend bool operator==(const AggregateStats& a, const AggregateStats& b) {
        return a.strategy.kind == b.strategy.kind && a.trials == b.trials && a.completed == b.completed &&
               a.by_status == b.by_status && a.wrong_decodes == b.wrong_decodes && a.caught == b.caught &&
               a.successes == b.successes && a.target_exceeded == b.target_exceeded &&
               a.family_announced == b.family_announced && a.baseline_correct == b.baseline_correct &&
               a.forgeries == b.forgeries && a.bits_learned == b.bits_learned;
    }
};

struct TrialInputs {
    protocol::InputBits inputs;
    protocol::ChoiceVector choices;
};

inline TrialInputs trial_inputs(const ExperimentConfig& config, const ProtocolParams& params, std::uint64_t trial) {
    auto [bits, choices] = adversary::draw_inputs(params, config.seed, trial);
    if (config.bits) bits = protocol::InputBits(*config.bits, params.n);
    if (config.choices) choices = protocol::ChoiceVector::from_zero_based(*config.choices, params.n, params.m);
    return {std::move(bits), std::move(choices)};
}

inline adversary::AdversarialOutcome run_trial(const ExperimentConfig& config, const ProtocolParams& params,
                                               std::uint64_t trial, bool record_transcript = false) {
    auto [inputs, choices] = trial_inputs(config, params, trial);
    return adversary::run_with_adversary(config.strategy, params, inputs, choices, config.seed,
                                         {trial, record_transcript});
}

// A uniform guess of the choice vector, the baseline for curious Alice.
inline bool baseline_guess_hits(const ExperimentConfig& config, const ProtocolParams& params, std::uint64_t trial,
                                const protocol::ChoiceVector& truth) {
    RandomSource rng(config.seed, "guess", trial);
    std::vector<std::size_t> labels(static_cast<std::size_t>(params.n));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i;
    sample_front(std::span<std::size_t>(labels), static_cast<std::size_t>(params.m), rng);
    labels.resize(static_cast<std::size_t>(params.m));
    std::sort(labels.begin(), labels.end());
    auto want = truth.labels();
    std::sort(want.begin(), want.end());
    return labels == want;
}

// Runs trials [first, last).
inline AggregateStats run_range(const ExperimentConfig& config, const ProtocolParams& params, std::uint64_t first,
                                std::uint64_t last) {
    AggregateStats stats;
    stats.strategy = config.strategy;
    for (std::uint64_t t = first; t < last; ++t) {
        const auto outcome = run_trial(config, params, t);
        bool baseline = false;
        if (config.strategy.kind == StrategyKind::CuriousAlice && outcome.family_announced)
            baseline = baseline_guess_hits(config, params, t, trial_inputs(config, params, t).choices);
        stats.add(outcome, baseline);
    }
    return stats;
}

inline AggregateStats run_experiment(const ExperimentConfig& config) {
    const ProtocolParams params = resolve_params(config);
    return run_range(config, params, 0, config.trials);
}

// ---------------------------------------------------------------------------
// Verdicts

enum class Relation : std::uint8_t {
    LessEqual,     // empirical <= reference
    Less,          // empirical < reference
    Greater,       // empirical > reference
    Within3Sigma,  // |empirical - reference| <= tolerance
    Equal,         // empirical == reference
    PValueAbove,   // empirical p-value > reference significance
    PValueBelow,   // empirical p-value < reference
};

inline const char* to_string(Relation r) noexcept {
    switch (r) {
        case Relation::LessEqual: return "<=";
        case Relation::Less: return "<";
        case Relation::Greater: return ">";
        case Relation::Within3Sigma: return "within 3 sigma";
        case Relation::Equal: return "==";
        case Relation::PValueAbove: return "p >";
        case Relation::PValueBelow: return "p <";
    }
    return "?";
}

struct Verdict {
    std::string criterion;
    double empirical = 0.0;
    double reference = 0.0;
    Relation relation = Relation::LessEqual;
    double tolerance = 0.0;
    bool pass = false;
};

inline bool holds(Relation relation, double empirical, double reference, double tolerance) {
    switch (relation) {
        case Relation::LessEqual: return empirical <= reference;
        case Relation::Less: return empirical < reference;
        case Relation::Greater: return empirical > reference;
        case Relation::Within3Sigma: return std::abs(empirical - reference) <= tolerance;
        case Relation::Equal: return empirical == reference;
        case Relation::PValueAbove: return empirical > reference;
        case Relation::PValueBelow: return empirical < reference;
    }
    return false;
}

inline Verdict verdict(std::string criterion, double empirical, double reference, Relation relation,
                       double tolerance = 0.0) {
    Verdict v{std::move(criterion), empirical, reference, relation, tolerance, false};
    v.pass = holds(relation, empirical, reference, tolerance);
    return v;
}

inline Verdict near_oracle(std::string criterion, std::uint64_t hits, std::uint64_t trials, double oracle) {
    return verdict(std::move(criterion), AggregateStats::rate(hits, trials), oracle, Relation::Within3Sigma,
                   stats::sigma_tolerance(oracle, trials));
}

struct Prediction {
    std::string name;
    double value = 0.0;
    std::optional<std::string> exact;
};

// Reference values the verdicts use, reported alongside the stats.
inline std::vector<Prediction> predictions(const ProtocolParams& params, const Strategy& strategy) {
    std::vector<Prediction> out;
    auto exact = [&](const char* name, oracle::Event e) {
        const auto pr = oracle::exact_failure_oracle(params, e);
        out.push_back({name, pr.value, pr.exact_string()});
    };
    const auto dc = correctness_epsilon(params.n, params.m);
    const auto dp = privacy_epsilon(params.n, params.m);
    switch (strategy.kind) {
        case StrategyKind::HonestBob:
        case StrategyKind::LeakyBob:
            exact("abort_probability", oracle::Event::Correctness);
            out.push_back({"correctness_hoeffding_bound", dc.hoeffding(params.N), std::nullopt});
            out.push_back({"correctness_epsilon_pow_N", dc.epsilon_pow(params.N), std::nullopt});
            break;
        case StrategyKind::GreedyBob:
            exact("greedy_success_probability", oracle::Event::PrivacyGreedy);
            out.push_back({"privacy_hoeffding_bound", dp.hoeffding(params.N), std::nullopt});
            out.push_back({"privacy_epsilon_pow_N", dp.epsilon_pow(params.N), std::nullopt});
            break;
        case StrategyKind::DishonestRemovalBob:
            exact("dishonest_removal_success_probability", oracle::Event::DishonestRemoval);
            exact("greedy_success_probability", oracle::Event::PrivacyGreedy);
            break;
        case StrategyKind::PostponeBob: {
            const auto pr = oracle::postpone_survival(params.N);
            out.push_back({"survival_probability", pr.value, pr.exact_string()});
            out.push_back({"privacy_epsilon_pow_N", dp.epsilon_pow(params.N), std::nullopt});
            break;
        }
        case StrategyKind::CommitCheatBob: {
            const auto b = commitment_attack_bound(*strategy.p, params.n, params.N, params.x);
            out.push_back({"forgery_success_probability", b.bound, std::nullopt});
            out.push_back({"commitment_epsilon_pow_N", b.epsilon_pow_N, std::nullopt});
            break;
        }
        case StrategyKind::CuriousAlice:
            out.push_back({"uniform_guess_accuracy", oracle::uniform_guess_accuracy(params.n, params.m), std::nullopt});
            break;
    }
    return out;
}

inline double prediction(const std::vector<Prediction>& ps, std::string_view name) {
    for (const auto& p : ps)
        if (p.name == name) return p.value;
    throw std::logic_error("no prediction named " + std::string(name));
}

inline std::vector<Verdict> check_bounds(const AggregateStats& s, const ProtocolParams& params) {
    std::vector<Verdict> out;
    const auto ps = predictions(params, s.strategy);
    switch (s.strategy.kind) {
        case StrategyKind::HonestBob:
        case StrategyKind::LeakyBob: {
            const double oracle = prediction(ps, "abort_probability");
            out.push_back(near_oracle("abort rate matches exact oracle", s.aborts(), s.trials, oracle));
            out.push_back(verdict("completed runs decode every chosen bit", static_cast<double>(s.wrong_decodes), 0,
                                  Relation::Equal));
            out.push_back(verdict("no cheat detected against honest Bob", static_cast<double>(s.caught), 0,
                                  Relation::Equal));
            out.push_back(verdict("abort oracle <= Hoeffding bound", oracle,
                                  prediction(ps, "correctness_hoeffding_bound"), Relation::LessEqual));
            out.push_back(verdict("abort oracle <= epsilon^N", oracle, prediction(ps, "correctness_epsilon_pow_N"),
                                  Relation::LessEqual));
            out.push_back(verdict("abort rate <= epsilon^N", s.abort_rate(),
                                  prediction(ps, "correctness_epsilon_pow_N"), Relation::LessEqual));
            break;
        }
        case StrategyKind::GreedyBob: {
            const double oracle = prediction(ps, "greedy_success_probability");
            out.push_back(near_oracle("greedy success matches exact oracle", s.successes, s.trials, oracle));
            out.push_back(verdict("greedy success <= epsilon_p^N", s.success_rate(),
                                  prediction(ps, "privacy_epsilon_pow_N"), Relation::LessEqual));
            out.push_back(verdict("greedy oracle <= Hoeffding bound", oracle, prediction(ps, "privacy_hoeffding_bound"),
                                  Relation::LessEqual));
            out.push_back(verdict("greedy oracle <= epsilon_p^N", oracle, prediction(ps, "privacy_epsilon_pow_N"),
                                  Relation::LessEqual));
            out.push_back(verdict("greedy Bob never caught", static_cast<double>(s.caught), 0, Relation::Equal));
            break;
        }
        case StrategyKind::DishonestRemovalBob: {
            const double oracle = prediction(ps, "dishonest_removal_success_probability");
            if (s.strategy.strict_alice) {
                out.push_back(verdict("strict Alice detects every dishonest removal", s.caught_rate(), 1.0,
                                      Relation::Equal));
                out.push_back(verdict("no success against strict Alice", s.success_rate(), 0.0, Relation::Equal));
            } else {
                out.push_back(near_oracle("dishonest removal success matches exact oracle", s.successes, s.trials,
                                          oracle));
                out.push_back(verdict("literal Alice never detects dishonest removal", s.caught_rate(), 0.0,
                                      Relation::Equal));
                out.push_back(verdict("dishonest removal beats compliant removal", s.success_rate(),
                                      prediction(ps, "greedy_success_probability"), Relation::Greater));
            }
            break;
        }
        case StrategyKind::PostponeBob: {
            const double survival = prediction(ps, "survival_probability");
            out.push_back(near_oracle("postponing survival matches (3/4)^N", s.trials - s.caught, s.trials, survival));
            if (survival < 1e-4)
                out.push_back(verdict("postponing survival below 1e-3", s.survival_rate(), 1e-3, Relation::Less));
            out.push_back(verdict("postponing success <= survival", s.success_rate(), s.survival_rate(),
                                  Relation::LessEqual));
            break;
        }
        case StrategyKind::CommitCheatBob: {
            const double forged = prediction(ps, "forgery_success_probability");
            const double eps_pow = prediction(ps, "commitment_epsilon_pow_N");
            out.push_back(near_oracle("forgery success matches p^((N-x)/n)", s.successes, s.trials, forged));
            out.push_back(verdict("p^((N-x)/n) < (p^(1/2n))^N", forged, eps_pow, Relation::Less));
            out.push_back(verdict("forgery success <= (p^(1/2n))^N", s.success_rate(), eps_pow, Relation::LessEqual));
            break;
        }
        case StrategyKind::CuriousAlice: {
            const double uniform = prediction(ps, "uniform_guess_accuracy");
            out.push_back(near_oracle("curious Alice accuracy matches uniform guessing", s.successes,
                                      s.family_announced, uniform));
            const auto z = stats::two_proportion(s.successes, s.family_announced, s.baseline_correct,
                                                 s.family_announced);
            out.push_back(verdict("curious Alice indistinguishable from a random guesser", z.p_value, 0.001,
                                  Relation::PValueAbove));
            out.push_back(verdict("completed runs decode every chosen bit", static_cast<double>(s.wrong_decodes), 0,
                                  Relation::Equal));
            break;
        }
    }
    return out;
}

inline bool all_pass(const std::vector<Verdict>& verdicts) {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

// ---------------------------------------------------------------------------
// Choice independence

// All m-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> all_choice_vectors(std::int64_t n, std::int64_t m) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        if (static_cast<std::int64_t>(cur.size()) == m) {
            out.push_back(cur);
            return;
        }
        for (std::size_t i = start; i < static_cast<std::size_t>(n); ++i) {
            cur.push_back(i);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

// What Alice sees of slot 0: the label of the subset holding it, or n when
// it was removed.
inline std::size_t first_slot_feature(const protocol::SubsetFamily& family) {
    for (std::size_t label = 0; label < family.subsets.size(); ++label)
        for (auto slot : family.subsets[label])
            if (slot == 0) return label;
    return family.subsets.size();
}

struct PairTest {
    std::size_t first = 0;   // indices into choice_vectors
    std::size_t second = 0;
    stats::ChiSquare chi;
    double total_variation = 0.0;
};

struct PrivacyReport {
    ProtocolParams params;
    bool leaky = false;
    std::uint64_t trials_per_choice = 0;
    std::vector<std::vector<std::size_t>> choice_vectors;
    std::vector<std::vector<std::uint64_t>> histograms;  // per choice vector
    std::vector<std::uint64_t> announced;                 // runs that reached the subset announcement
    std::vector<PairTest> pairs;
    double alpha = 0.001;
    double corrected_alpha = 0.001;
    double min_p_value = 1.0;
    double max_total_variation = 0.0;
    std::vector<Verdict> verdicts;
};

inline constexpr double kPrivacySignificance = 0.001;
inline constexpr double kControlSignificance = 1e-6;

inline PrivacyReport privacy_independence_test(const ProtocolParams& params, std::uint64_t trials_per_choice,
                                               std::uint64_t seed, bool leaky = false) {
    if (trials_per_choice < 1) throw std::invalid_argument("trials per choice must be at least 1");
    PrivacyReport r;
    r.params = params;
    r.leaky = leaky;
    r.trials_per_choice = trials_per_choice;
    r.choice_vectors = all_choice_vectors(params.n, params.m);
    const Strategy strategy = Strategy::of(leaky ? StrategyKind::LeakyBob : StrategyKind::HonestBob);
    for (std::size_t k = 0; k < r.choice_vectors.size(); ++k) {
        std::vector<std::uint64_t> hist(static_cast<std::size_t>(params.n) + 1, 0);
        std::uint64_t announced = 0;
        const auto choices = protocol::ChoiceVector::from_zero_based(r.choice_vectors[k], params.n, params.m);
        for (std::uint64_t t = 0; t < trials_per_choice; ++t) {
            const std::uint64_t trial = k * trials_per_choice + t;
            auto [inputs, unused] = adversary::draw_inputs(params, seed, trial);
            (void)unused;
            protocol::Alice alice(params, inputs, RandomSource(seed, protocol::kAliceStream, trial));
            auto bob = adversary::detail::make_bob(strategy, params, choices,
                                                   RandomSource(seed, protocol::kBobStream, trial));
            protocol::Session session(params, alice, *bob, seed, trial, {});
            session.run();
            if (!alice.family()) continue;
            ++announced;
            ++hist[first_slot_feature(*alice.family())];
        }
        r.histograms.push_back(std::move(hist));
        r.announced.push_back(announced);
    }
    const std::size_t k = r.choice_vectors.size();
    const std::size_t npairs = k * (k - 1) / 2;
    r.alpha = kPrivacySignificance;
    r.corrected_alpha = npairs > 0 ? kPrivacySignificance / static_cast<double>(npairs) : kPrivacySignificance;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            PairTest pt{i, j, stats::chi_square_homogeneity(r.histograms[i], r.histograms[j]),
                        stats::total_variation(r.histograms[i], r.histograms[j])};
            r.min_p_value = std::min(r.min_p_value, pt.chi.p_value);
            r.max_total_variation = std::max(r.max_total_variation, pt.total_variation);
            r.pairs.push_back(pt);
        }
    }
    if (leaky) {
        r.verdicts.push_back(verdict("leaky control detected", r.min_p_value, kControlSignificance,
                                     Relation::PValueBelow));
    } else {
        r.verdicts.push_back(verdict("announced family independent of choices", r.min_p_value, r.corrected_alpha,
                                     Relation::PValueAbove));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Reports

// 12 significant digits.
inline double round12(double v) {
    if (!std::isfinite(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

inline Json number(double v) { return round12(v); }

inline Json to_json(const ProtocolParams& p) {
    Json j;
    j["n"] = p.n;
    j["m"] = p.m;
    j["N"] = p.N;
    j["rate_case"] = to_string(p.rate_case);
    j["x"] = p.x;
    j["subset_size"] = p.subset_size;
    j["target_rate"] = rational_string(p.target_rate);
    return j;
}

inline Json to_json(const Strategy& s) {
    Json j;
    j["name"] = to_string(s.kind);
    if (s.p) j["p"] = number(*s.p);
    if (s.kind == StrategyKind::DishonestRemovalBob) j["alice_verifier"] = s.strict_alice ? "strict" : "literal";
    return j;
}

inline Json rate_json(std::uint64_t k, std::uint64_t n) {
    const auto ci = stats::wilson(k, n);
    Json j;
    j["count"] = k;
    j["rate"] = number(AggregateStats::rate(k, n));
    j["wilson99"] = Json::array({number(ci.lower), number(ci.upper)});
    return j;
}

inline Json to_json(const AggregateStats& s) {
    Json j;
    j["trials"] = s.trials;
    j["completed"] = s.completed;
    Json aborts;
    for (auto st : {Status::AbortInsufficientMatches, Status::AbortCheatDetected, Status::AbortInvalidMessage})
        aborts[protocol::to_string(st)] = s.count(st);
    j["aborts"] = aborts;
    j["correctness_failures"] = s.correctness_failures();
    j["wrong_decodes"] = s.wrong_decodes;
    j["abort_rate"] = rate_json(s.aborts(), s.trials);
    j["caught_rate"] = rate_json(s.caught, s.trials);
    j["success_rate"] = rate_json(s.successes, s.trials);
    j["target_exceeded"] = s.target_exceeded;
    j["family_announced"] = s.family_announced;
    if (s.strategy.kind == StrategyKind::CuriousAlice) {
        j["guess_accuracy"] = rate_json(s.successes, s.family_announced);
        j["baseline_accuracy"] = rate_json(s.baseline_correct, s.family_announced);
    }
    j["forgeries"] = s.forgeries;
    j["mean_bits_learned"] = number(AggregateStats::rate(s.bits_learned, s.trials));
    return j;
}

inline Json to_json(const std::vector<Prediction>& ps) {
    Json j = Json::object();
    for (const auto& p : ps) {
        Json e;
        e["value"] = number(p.value);
        if (p.exact) e["exact"] = *p.exact;
        j[p.name] = e;
    }
    return j;
}

inline Json to_json(const Verdict& v) {
    Json j;
    j["criterion"] = v.criterion;
    j["empirical"] = number(v.empirical);
    j["reference"] = number(v.reference);
    j["relation"] = to_string(v.relation);
    j["tolerance"] = number(v.tolerance);
    j["pass"] = v.pass;
    return j;
}

inline Json to_json(const std::vector<Verdict>& vs) {
    Json arr = Json::array();
    for (const auto& v : vs) arr.push_back(to_json(v));
    return arr;
}

inline Json to_json(const Deviation& d) {
    Json j;
    j["stated"] = rational_string(d.stated);
    j["delta"] = rational_string(d.delta);
    j["epsilon"] = number(d.epsilon);
    j["sign_claim_holds"] = d.sign_claim_holds;
    return j;
}

inline Json to_json(const BoundReport& r) {
    Json j;
    j["n"] = r.n;
    j["m"] = r.m;
    j["rate_case"] = to_string(r.rate_case);
    j["target_rate"] = rational_string(r.target_rate);
    j["correctness"] = to_json(r.correctness);
    j["privacy"] = to_json(r.privacy);
    j["min_N_correctness"] = r.min_N_correctness;
    j["min_N_privacy"] = r.min_N_privacy;
    j["correctness_bound_form"] = r.correctness_bound_form;
    j["privacy_bound_form"] = r.privacy_bound_form;
    if (r.params) {
        j["params"] = to_json(*r.params);
        j["stated_divisibility_condition"] = stated_divisibility_condition(r.n, r.m, r.params->N);
    }
    j["correctness_hoeffding_bound"] = number(r.bound_correctness);
    j["privacy_hoeffding_bound"] = number(r.bound_privacy);
    j["correctness_epsilon_pow_N"] = number(r.eps_correctness_pow_N);
    j["privacy_epsilon_pow_N"] = number(r.eps_privacy_pow_N);
    if (r.commitment) {
        Json c;
        c["p"] = number(*r.p);
        c["bound"] = number(r.commitment->bound);
        c["epsilon"] = number(r.commitment->epsilon);
        c["epsilon_pow_N"] = number(r.commitment->epsilon_pow_N);
        c["dominated"] = r.commitment->dominated;
        j["commitment_attack"] = c;
    }
    return j;
}

inline Json to_json(const PrivacyReport& r) {
    Json j;
    j["params"] = to_json(r.params);
    j["bob"] = r.leaky ? "leaky" : "honest";
    j["trials_per_choice"] = r.trials_per_choice;
    j["feature"] = "label of the subset holding slot 1 (n+1 = removed)";
    Json choices = Json::array();
    for (std::size_t k = 0; k < r.choice_vectors.size(); ++k) {
        Json c;
        c["choices"] = protocol::one_based(r.choice_vectors[k]);
        c["announced"] = r.announced[k];
        c["histogram"] = r.histograms[k];
        choices.push_back(c);
    }
    j["choice_vectors"] = choices;
    Json pairs = Json::array();
    for (const auto& p : r.pairs) {
        Json e;
        e["a"] = protocol::one_based(r.choice_vectors[p.first]);
        e["b"] = protocol::one_based(r.choice_vectors[p.second]);
        e["chi_square"] = number(p.chi.statistic);
        e["dof"] = p.chi.dof;
        e["p_value"] = number(p.chi.p_value);
        e["total_variation"] = number(p.total_variation);
        pairs.push_back(e);
    }
    j["pairs"] = pairs;
    j["significance"] = number(r.alpha);
    j["corrected_significance"] = number(r.corrected_alpha);
    j["min_p_value"] = number(r.min_p_value);
    j["max_total_variation"] = number(r.max_total_variation);
    j["verdicts"] = to_json(r.verdicts);
    return j;
}

enum class Format : std::uint8_t { Json, Table };

// Wraps a payload in the common envelope.
inline Json envelope(std::string_view command, std::optional<std::uint64_t> seed, Json body, bool pass) {
    Json j;
    j["tool"] = "qot";
    j["version"] = kVersion;
    j["command"] = command;
    if (seed) j["seed"] = *seed;
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    j["pass"] = pass;
    return j;
}

inline Json experiment_report(const ExperimentConfig& config, const ProtocolParams& params,
                              const AggregateStats& stats, const std::vector<Verdict>& verdicts,
                              std::string_view command) {
    Json body;
    Json cfg;
    cfg["trials"] = config.trials;
    cfg["strategy"] = to_json(config.strategy);
    if (config.bits) {
        cfg["bits"] = protocol::bits_string(*config.bits);
    } else {
        cfg["bits"] = "random";
    }
    if (config.choices) {
        cfg["choices"] = protocol::one_based(*config.choices);
    } else {
        cfg["choices"] = "random";
    }
    body["config"] = cfg;
    body["params"] = to_json(params);
    body["predictions"] = to_json(predictions(params, config.strategy));
    body["stats"] = to_json(stats);
    body["verdicts"] = to_json(verdicts);
    return envelope(command, config.seed, body, all_pass(verdicts));
}

// Rows of a verdict list as aligned text.
inline void verdict_table(std::ostream& out, const Json& verdicts) {
    out << std::left << std::setw(6) << "PASS" << std::setw(56) << "criterion" << std::setw(16) << "empirical"
        << std::setw(16) << "relation" << std::setw(16) << "reference" << "tolerance\n";
    for (const auto& v : verdicts) {
        out << std::setw(6) << (v["pass"].get<bool>() ? "yes" : "NO") << std::setw(56)
            << v["criterion"].get<std::string>() << std::setw(16) << v["empirical"].dump() << std::setw(16)
            << v["relation"].get<std::string>() << std::setw(16) << v["reference"].dump()
            << v["tolerance"].dump() << '\n';
    }
}

// Flattens a report into "key: value" lines, with verdicts as a table.
inline void table(std::ostream& out, const Json& j, const std::string& prefix = "") {
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.key() == "verdicts" && it->is_array()) {
            out << '\n';
            verdict_table(out, *it);
            out << '\n';
        } else if (it->is_object()) {
            table(out, *it, key);
        } else {
            out << key << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
        }
    }
}

inline void emit_report(std::ostream& out, const Json& report, Format format) {
    if (format == Format::Json) {
        out << report.dump(2) << '\n';
    } else {
        table(out, report);
    }
    if (!out) throw std::runtime_error("failed to write report");
}

}  // namespace qot::harness
