// cli.hpp
// The qot command line, callable in-process.

#pragma once

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qot/harness.hpp"

namespace qot::cli {

using harness::Format;
using harness::Json;

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kVerdictFailed = 1;
inline constexpr int kUsage = 2;

namespace detail {

struct Common {
    std::int64_t n = 0;
    std::int64_t m = 0;
    std::optional<std::int64_t> N;
    std::optional<std::int64_t> auto_N;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 1;
    std::vector<int> bits;
    std::vector<std::int64_t> choices;
    std::string format = "json";
    std::string out_path;
    std::string transcript_path;
};

inline void add_params(CLI::App* cmd, Common& c, bool allow_auto) {
    cmd->add_option("--n", c.n, "number of Alice's bits")->required();
    cmd->add_option("--m", c.m, "number of bits Bob receives")->required();
    auto* N = cmd->add_option("--N", c.N, "photon pairs, must be admissible");
    if (allow_auto) {
        auto* a = cmd->add_option("--auto-N", c.auto_N, "use the smallest admissible N at or above this floor");
        N->excludes(a);
    }
}

inline void add_seed(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "64-bit seed")->envname("QOT_SEED");
}

inline void add_format(CLI::App* cmd, Common& c) {
    cmd->add_option("--format", c.format, "json or table")->check(CLI::IsMember({"json", "table"}));
    cmd->add_option("--out", c.out_path, "write the report here instead of stdout");
}

inline void add_inputs(CLI::App* cmd, Common& c) {
    auto* bits = cmd->add_option("--bits", c.bits, "Alice's bits, comma separated")->delimiter(',');
    auto* rb = cmd->add_flag("--random-bits", "fresh random bits per trial (default)");
    bits->excludes(rb);
    auto* ch = cmd->add_option("--choices", c.choices, "Bob's 1-based choices, comma separated")->delimiter(',');
    auto* rc = cmd->add_flag("--random-choices", "fresh random choices per trial (default)");
    ch->excludes(rc);
    cmd->add_option("--transcript", c.transcript_path, "write the transcript of trial 1 as JSON lines");
}

inline harness::ExperimentConfig experiment(const Common& c, adversary::Strategy strategy) {
    harness::ExperimentConfig cfg;
    cfg.n = c.n;
    cfg.m = c.m;
    cfg.N = c.N;
    cfg.auto_N_floor = c.auto_N;
    cfg.trials = c.trials;
    cfg.seed = c.seed;
    cfg.strategy = strategy;
    if (!c.bits.empty()) {
        std::vector<Bit> bits;
        for (int b : c.bits) {
            if (b != 0 && b != 1) throw std::invalid_argument("--bits takes 0s and 1s");
            bits.push_back(static_cast<Bit>(b));
        }
        cfg.bits = bits;
    }
    if (!c.choices.empty()) {
        cfg.choices = protocol::ChoiceVector::from_one_based(c.choices, c.n, c.m).labels();
    }
    return cfg;
}

inline Format format_of(const Common& c) { return c.format == "table" ? Format::Table : Format::Json; }

inline void write(const Json& report, const Common& c, std::ostream& out) {
    if (c.out_path.empty()) {
        harness::emit_report(out, report, format_of(c));
        return;
    }
    std::ofstream file(c.out_path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + c.out_path + " for writing");
    try {
        harness::emit_report(file, report, format_of(c));
    } catch (const std::exception& e) {
        throw std::runtime_error(c.out_path + ": " + e.what());
    }
}

inline void write_transcript(const harness::ExperimentConfig& cfg, const ProtocolParams& params, const Common& c) {
    if (c.transcript_path.empty()) return;
    auto outcome = harness::run_trial(cfg, params, 0, true);
    std::ofstream file(c.transcript_path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open " + c.transcript_path + " for writing");
    Json head;
    head["strategy"] = adversary::to_string(cfg.strategy.kind);
    head["trial"] = 1;
    head["status"] = protocol::to_string(outcome.status);
    head["bits_learned"] = outcome.bits_learned;
    file << head.dump() << '\n' << outcome.transcript->to_jsonl();
    if (!file) throw std::runtime_error(c.transcript_path + ": write failed");
}

inline int experiment_command(const Common& c, adversary::Strategy strategy, std::string_view command,
                              std::ostream& out) {
    const auto cfg = experiment(c, strategy);
    const auto params = harness::resolve_params(cfg);
    const auto stats = harness::run_experiment(cfg);
    const auto verdicts = harness::check_bounds(stats, params);
    write(harness::experiment_report(cfg, params, stats, verdicts, command), c, out);
    write_transcript(cfg, params, c);
    return harness::all_pass(verdicts) ? kOk : kVerdictFailed;
}

}  // namespace detail

// args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator and analysis toolkit for quantum m-out-of-n oblivious transfer", "qot"};
    app.require_subcommand(1);
    app.set_version_flag("--version", harness::kVersion);

    detail::Common c;

    auto* bounds = app.add_subcommand("bounds", "analytic rates, deviations and bounds");
    detail::add_params(bounds, c, false);
    std::optional<double> p;
    bounds->add_option("--p", p, "commitment cheat probability");
    detail::add_format(bounds, c);

    auto* run = app.add_subcommand("run", "honest Monte Carlo run with verdicts");
    detail::add_params(run, c, true);
    run->add_option("--trials", c.trials, "number of trials")->check(CLI::PositiveNumber);
    detail::add_seed(run, c);
    detail::add_inputs(run, c);
    detail::add_format(run, c);

    auto* attack = app.add_subcommand("attack", "Monte Carlo run against a dishonest party");
    std::string strategy_name;
    attack->add_option("--strategy", strategy_name, "dishonest party")
        ->required()
        ->check(CLI::IsMember(
            {"honest", "greedy", "dishonest-removal", "postpone", "commit-cheat", "curious-alice", "leaky"}));
    attack->add_option("--p", p, "per-unveil forgery acceptance probability (commit-cheat)");
    bool strict = false;
    attack->add_flag("--strict-alice", strict, "Alice rejects removals of mismatching slots (dishonest-removal)");
    detail::add_params(attack, c, true);
    attack->add_option("--trials", c.trials, "number of trials")->check(CLI::PositiveNumber);
    detail::add_seed(attack, c);
    detail::add_inputs(attack, c);
    detail::add_format(attack, c);

    auto* privacy = app.add_subcommand("privacy-test", "choice-independence test of the announced subsets");
    detail::add_params(privacy, c, true);
    std::uint64_t per_choice = 20000;
    privacy->add_option("--trials-per-choice", per_choice, "trials per choice vector")->check(CLI::PositiveNumber);
    bool no_control = false;
    privacy->add_flag("--no-control", no_control, "skip the leaky positive control");
    detail::add_seed(privacy, c);
    detail::add_format(privacy, c);

    auto* oracle_cmd = app.add_subcommand("oracle", "exact probability of an honest-coin event");
    detail::add_params(oracle_cmd, c, false);
    std::string event_name = "correctness";
    oracle_cmd->add_option("--event", event_name, "correctness, privacy or dishonest-removal")
        ->check(CLI::IsMember({"correctness", "privacy", "dishonest-removal"}));
    detail::add_format(oracle_cmd, c);

    std::vector<const char*> argv{"qot"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*bounds) {
            const auto report = make_bound_report(c.n, c.m, c.N, p);
            detail::write(harness::envelope("bounds", std::nullopt, harness::to_json(report), true), c, out);
            return kOk;
        }
        if (*run) return detail::experiment_command(c, adversary::Strategy::honest(), "run", out);
        if (*attack) {
            const auto kind = *adversary::strategy_from_string(strategy_name);
            adversary::Strategy s = adversary::Strategy::of(kind);
            if (kind == adversary::StrategyKind::CommitCheatBob) {
                if (!p) throw std::invalid_argument("commit-cheat needs --p");
                s = adversary::Strategy::commit_cheat(*p);
            } else if (p) {
                throw std::invalid_argument("--p applies to commit-cheat only");
            }
            if (strict && kind != adversary::StrategyKind::DishonestRemovalBob)
                throw std::invalid_argument("--strict-alice applies to dishonest-removal only");
            s.strict_alice = strict;
            return detail::experiment_command(c, s, "attack", out);
        }
        if (*privacy) {
            harness::ExperimentConfig cfg = detail::experiment(c, adversary::Strategy::honest());
            const auto params = harness::resolve_params(cfg);
            Json body;
            const auto honest = harness::privacy_independence_test(params, per_choice, c.seed, false);
            body["honest"] = harness::to_json(honest);
            bool pass = harness::all_pass(honest.verdicts);
            if (!no_control) {
                const auto leaky = harness::privacy_independence_test(params, per_choice, c.seed, true);
                body["control"] = harness::to_json(leaky);
                pass = pass && harness::all_pass(leaky.verdicts);
            }
            detail::write(harness::envelope("privacy-test", c.seed, body, pass), c, out);
            return pass ? kOk : kVerdictFailed;
        }
        if (*oracle_cmd) {
            if (!c.N) throw std::invalid_argument("oracle needs --N");
            const auto params = validate_params(c.n, c.m, *c.N);
            const auto event = *oracle::event_from_string(event_name);
            const auto pr = oracle::exact_failure_oracle(params, event);
            Json body;
            body["params"] = harness::to_json(params);
            body["event"] = oracle::to_string(event);
            body["exact"] = pr.exact_string();
            body["probability"] = harness::number(pr.value);
            detail::write(harness::envelope("oracle", std::nullopt, body, true), c, out);
            return kOk;
        }
    } catch (const ParameterError& e) {
        err << "qot: invalid parameters: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "qot: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "qot: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace qot::cli
