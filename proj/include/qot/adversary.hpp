// adversary.hpp
// Dishonest parties for probing the privacy claims.
//
// Each dishonest Bob overrides individual hooks of protocol::Bob; the honest
// Alice keeps every check. Information gain is never self-reported: it is
// recomputed from the ground truth of both parties after the run.

#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qot/protocol.hpp"

namespace qot::adversary {

using protocol::Basis;
using protocol::ChoiceVector;
using protocol::InputBits;
using protocol::Status;
using protocol::SubsetFamily;

enum class StrategyKind : std::uint8_t {
    HonestBob,
    GreedyBob,
    DishonestRemovalBob,
    PostponeBob,
    CommitCheatBob,
    CuriousAlice,
    LeakyBob,  // positive control for the independence test
};

inline const char* to_string(StrategyKind k) noexcept {
    switch (k) {
        case StrategyKind::HonestBob: return "honest";
        case StrategyKind::GreedyBob: return "greedy";
        case StrategyKind::DishonestRemovalBob: return "dishonest-removal";
        case StrategyKind::PostponeBob: return "postpone";
        case StrategyKind::CommitCheatBob: return "commit-cheat";
        case StrategyKind::CuriousAlice: return "curious-alice";
        case StrategyKind::LeakyBob: return "leaky";
    }
    return "?";
}

inline std::optional<StrategyKind> strategy_from_string(std::string_view s) {
    for (auto k : {StrategyKind::HonestBob, StrategyKind::GreedyBob, StrategyKind::DishonestRemovalBob,
                   StrategyKind::PostponeBob, StrategyKind::CommitCheatBob, StrategyKind::CuriousAlice,
                   StrategyKind::LeakyBob})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

struct Strategy {
    StrategyKind kind = StrategyKind::HonestBob;
    std::optional<double> p;            // CommitCheatBob only, 0 < p < 1
    bool strict_alice = false;          // Alice rejects mismatched low-case removals

    static Strategy honest() { return {}; }
    static Strategy of(StrategyKind kind) { return {kind, std::nullopt, false}; }
    static Strategy commit_cheat(double p) {
        commitment::CheatModel check(p);
        (void)check;
        return {StrategyKind::CommitCheatBob, p, false};
    }
};

// ---------------------------------------------------------------------------
// Dishonest Bobs

// Announces as many all-matching subsets as the surviving matches allow and
// outputs every bit it can decode with certainty.
class GreedyBob : public protocol::Bob {
  public:
    using Bob::Bob;

  protected:
    std::optional<SubsetFamily> choose_subsets() override {
        auto [good, rest] = split_by_reliability();
        const auto n = static_cast<std::size_t>(params_.n);
        const auto s = static_cast<std::size_t>(params_.subset_size);
        const std::size_t achievable = std::min(n, good.size() / s);
        if (achievable < choices_.size()) return std::nullopt;
        std::vector<std::size_t> extra;
        for (std::size_t label = 0; label < n; ++label)
            if (!choices_.contains(label)) extra.push_back(label);
        shuffle(std::span<std::size_t>(extra), rng_);
        output_labels_ = choices_.labels();
        output_labels_.insert(output_labels_.end(), extra.begin(),
                              extra.begin() + static_cast<std::ptrdiff_t>(achievable - choices_.size()));
        return protocol::fill_family(std::move(good), std::move(rest), output_labels_, n, s, rng_);
    }
};

// Low case only: removes mismatching slots while claiming compliance, so more
// matches survive for extra subsets. Falls back to matching slots when there
// are fewer than x mismatches.
class DishonestRemovalBob : public GreedyBob {
  public:
    using GreedyBob::GreedyBob;

  protected:
    std::optional<std::vector<std::size_t>> choose_removal() override {
        std::vector<std::size_t> mismatched;
        std::vector<std::size_t> matched;
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot)
            (committed_match(slot) ? matched : mismatched).push_back(slot);
        shuffle(std::span<std::size_t>(mismatched), rng_);
        shuffle(std::span<std::size_t>(matched), rng_);
        mismatched.insert(mismatched.end(), matched.begin(), matched.end());
        mismatched.resize(static_cast<std::size_t>(params_.x));
        std::sort(mismatched.begin(), mismatched.end());
        return mismatched;
    }
};

// Stores every photon and commits to random guesses instead of measuring.
// Survives each challenge with probability 3/4; after the basis
// announcement it measures the stored survivors in Alice's bases.
class PostponeBob : public GreedyBob {
  public:
    using GreedyBob::GreedyBob;

  protected:
    void measure_photons() override {
        for (std::size_t i = 0; i < photons_.size(); ++i) {
            committed_bit_[i] = rng_.bit();
            committed_basis_[i] = channel::basis_from_bit(rng_.bit());
        }
    }

    void after_bases() override {
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot) {
            const std::size_t idx = survivor_[slot];
            known_bit_[idx] = channel::measure(photons_[idx], alice_basis_[slot], rng_);
            measured_in_[idx] = alice_basis_[slot];
        }
    }

    // Only slots whose random commitment survives Alice's removal check.
    std::optional<std::vector<std::size_t>> choose_removal() override {
        std::vector<std::size_t> eligible;
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot) {
            const std::size_t idx = survivor_[slot];
            const bool ok = params_.rate_case == RateCase::Low
                                ? committed_match(slot) && committed_bit_[idx] == known_bit_[idx]
                                : !committed_match(slot);
            if (ok) eligible.push_back(slot);
        }
        return protocol::draw_removal(std::move(eligible), static_cast<std::size_t>(params_.x), rng_);
    }
};

// Leaves s = (N-x)/n photon pairs unmeasured and commits to them without
// binding the bit. When one of these pairs is challenged it measures the
// challenged photon in its committed basis and forges the bit unveil, which
// the weak commitment accepts with probability p. The unchallenged photon is
// measured after the basis announcement, giving one extra subset of certain
// bits.
class CommitCheatBob : public protocol::Bob {
  public:
    using Bob::Bob;

  protected:
    void measure_photons() override {
        std::vector<std::size_t> slots(N());
        for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
        const auto s = static_cast<std::size_t>(params_.subset_size);
        sample_front(std::span<std::size_t>(slots), s, rng_);
        postponed_.assign(N(), false);
        for (std::size_t i = 0; i < s; ++i) postponed_[slots[i]] = true;
        for (std::size_t idx = 0; idx < photons_.size(); ++idx) {
            const Basis basis = channel::basis_from_bit(rng_.bit());
            if (postponed_[idx % N()]) {
                committed_basis_[idx] = basis;
            } else {
                measure_now(idx, basis);
            }
        }
    }

    void commit_index(std::size_t index, commitment::Ledger& ledger) override {
        if (!postponed_[index % N()]) return Bob::commit_index(index, ledger);
        bit_commit_[index] = ledger.commit_unbound();
        basis_commit_[index] = ledger.commit(channel::to_bit(committed_basis_[index]));
    }

    std::vector<protocol::OpenRequest> open_index(std::size_t index) override {
        if (!postponed_[index % N()]) return Bob::open_index(index);
        const Bit r = channel::measure(photons_[index], committed_basis_[index], rng_);
        known_bit_[index] = r;
        measured_in_[index] = committed_basis_[index];
        return {protocol::OpenRequest{bit_commit_[index].id, r},
                protocol::OpenRequest{basis_commit_[index].id, std::nullopt}};
    }

    void after_bases() override {
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot) {
            if (!postponed_[slot]) continue;
            const std::size_t idx = survivor_[slot];
            known_bit_[idx] = channel::measure(photons_[idx], alice_basis_[slot], rng_);
            measured_in_[idx] = alice_basis_[slot];
        }
    }

    std::optional<std::vector<std::size_t>> choose_removal() override {
        std::vector<std::size_t> eligible;
        const bool want_match = params_.rate_case == RateCase::Low;
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot)
            if (!postponed_[slot] && committed_match(slot) == want_match) eligible.push_back(slot);
        return protocol::draw_removal(std::move(eligible), static_cast<std::size_t>(params_.x), rng_);
    }

    std::optional<SubsetFamily> choose_subsets() override {
        const auto n = static_cast<std::size_t>(params_.n);
        const auto s = static_cast<std::size_t>(params_.subset_size);
        std::vector<std::size_t> good;
        std::vector<std::size_t> rest;
        std::vector<std::size_t> held;
        for (std::size_t slot = 0; slot < survivor_.size(); ++slot) {
            if (removed_[slot]) continue;
            if (postponed_[slot]) {
                held.push_back(slot);
            } else {
                (reliable(slot) ? good : rest).push_back(slot);
            }
        }
        const std::size_t need = choices_.size() * s;
        if (good.size() < need) return std::nullopt;

        std::vector<std::size_t> others;
        for (std::size_t label = 0; label < n; ++label)
            if (!choices_.contains(label)) others.push_back(label);
        const std::size_t extra = others[static_cast<std::size_t>(rng_.below(others.size()))];

        sample_front(std::span<std::size_t>(good), need, rng_);
        SubsetFamily family;
        family.subsets.assign(n, {});
        std::size_t pos = 0;
        for (auto label : choices_.labels()) {
            family.subsets[label].assign(good.begin() + static_cast<std::ptrdiff_t>(pos),
                                         good.begin() + static_cast<std::ptrdiff_t>(pos + s));
            pos += s;
        }
        family.subsets[extra] = held;
        rest.insert(rest.end(), good.begin() + static_cast<std::ptrdiff_t>(need), good.end());
        shuffle(std::span<std::size_t>(rest), rng_);
        pos = 0;
        for (auto label : others) {
            if (label == extra) continue;
            family.subsets[label].assign(rest.begin() + static_cast<std::ptrdiff_t>(pos),
                                         rest.begin() + static_cast<std::ptrdiff_t>(pos + s));
            pos += s;
        }
        for (auto& subset : family.subsets) std::sort(subset.begin(), subset.end());
        output_labels_ = choices_.labels();
        output_labels_.push_back(extra);
        return family;
    }

  private:
    std::vector<bool> postponed_;
};

// Honest except that the chosen subsets always take the lowest matching
// slots, which makes the announced family depend on the choice.
class LeakyBob : public protocol::Bob {
  public:
    using Bob::Bob;

  protected:
    std::optional<SubsetFamily> choose_subsets() override {
        auto [good, rest] = split_by_reliability();
        output_labels_ = choices_.labels();
        return protocol::fill_family(std::move(good), std::move(rest), output_labels_,
                                     static_cast<std::size_t>(params_.n),
                                     static_cast<std::size_t>(params_.subset_size), rng_,
                                     protocol::FillOrder::LowestFirst);
    }
};

// ---------------------------------------------------------------------------

// Curious Alice's guess from her view of the family: the labels of the
// subsets holding the lowest-numbered slots, until m distinct labels are
// found. Sorted.
inline std::vector<std::size_t> guess_choices(const SubsetFamily& family, std::size_t m) {
    std::vector<std::pair<std::size_t, std::size_t>> by_slot;
    for (std::size_t label = 0; label < family.subsets.size(); ++label)
        for (auto slot : family.subsets[label]) by_slot.emplace_back(slot, label);
    std::sort(by_slot.begin(), by_slot.end());
    std::vector<std::size_t> guess;
    for (const auto& [slot, label] : by_slot) {
        if (guess.size() == m) break;
        if (std::find(guess.begin(), guess.end(), label) == guess.end()) guess.push_back(label);
    }
    std::sort(guess.begin(), guess.end());
    return guess;
}

struct AdversarialOutcome {
    StrategyKind strategy = StrategyKind::HonestBob;
    Status status = Status::AbortInvalidMessage;
    bool caught = false;
    std::size_t bits_learned = 0;   // output bits that are correct with certainty
    bool target_exceeded = false;   // bits_learned > m
    bool success = false;           // the strategy's own goal, see run_with_adversary
    bool decoded_correctly = false;  // Completed and every chosen bit right
    bool family_announced = false;
    std::size_t forgeries = 0;
    std::int64_t matches = -1;
    std::optional<std::vector<std::size_t>> choice_guess;
    std::optional<protocol::Transcript> transcript;
};

struct AdversaryRunOptions {
    std::uint64_t trial = 0;
    bool record_transcript = false;
};

namespace detail {

inline std::unique_ptr<protocol::Bob> make_bob(const Strategy& strategy, const ProtocolParams& params,
                                               const ChoiceVector& choices, RandomSource rng) {
    switch (strategy.kind) {
        case StrategyKind::GreedyBob: return std::make_unique<GreedyBob>(params, choices, rng);
        case StrategyKind::DishonestRemovalBob: return std::make_unique<DishonestRemovalBob>(params, choices, rng);
        case StrategyKind::PostponeBob: return std::make_unique<PostponeBob>(params, choices, rng);
        case StrategyKind::CommitCheatBob: return std::make_unique<CommitCheatBob>(params, choices, rng);
        case StrategyKind::LeakyBob: return std::make_unique<LeakyBob>(params, choices, rng);
        case StrategyKind::HonestBob:
        case StrategyKind::CuriousAlice: break;
    }
    return std::make_unique<protocol::Bob>(params, choices, rng);
}

// Labels Bob outputs whose every slot he measured in Alice's basis and whose
// decoded bit equals Alice's input.
inline std::size_t certain_bits(const protocol::Alice& alice, const protocol::Bob& bob, const InputBits& inputs) {
    if (bob.status() != Status::Completed || !bob.family()) return 0;
    std::size_t count = 0;
    for (auto label : bob.output_labels()) {
        bool certain = true;
        for (auto slot : bob.family()->subsets[label]) {
            const std::size_t idx = alice.survivors()[slot];
            const auto in = bob.measured_in(idx);
            if (!in || *in != alice.basis(idx)) {
                certain = false;
                break;
            }
        }
        const auto it = bob.recovered().find(label);
        if (certain && it != bob.recovered().end() && it->second == inputs[label]) ++count;
    }
    return count;
}

}  // namespace detail

// Runs one session with the party named by `strategy` replaced. Success is:
//   honest, leaky     Completed with every chosen bit correct
//   greedy, dishonest-removal, postpone
//                     more than m certain bits
//   commit-cheat      every forged unveil accepted
//   curious-alice     Alice's guess equals Bob's choices
inline AdversarialOutcome run_with_adversary(const Strategy& strategy, const ProtocolParams& params,
                                             const InputBits& inputs, const ChoiceVector& choices, std::uint64_t seed,
                                             const AdversaryRunOptions& options = {}) {
    if (strategy.kind == StrategyKind::DishonestRemovalBob && params.rate_case != RateCase::Low)
        throw std::invalid_argument("dishonest-removal applies to the low-rate case (2m+1 < n) only");
    if (strategy.kind == StrategyKind::CommitCheatBob && !strategy.p)
        throw std::invalid_argument("commit-cheat needs a cheat probability p");

    protocol::SessionOptions session_options;
    session_options.record_transcript = options.record_transcript;
    session_options.alice.strict_removal_check = strategy.strict_alice;
    if (strategy.p) session_options.cheat = commitment::CheatModel(*strategy.p);

    protocol::Alice alice(params, inputs, RandomSource(seed, protocol::kAliceStream, options.trial),
                          session_options.alice);
    auto bob = detail::make_bob(strategy, params, choices, RandomSource(seed, protocol::kBobStream, options.trial));
    protocol::Session session(params, alice, *bob, seed, options.trial, session_options);
    session.run();

    AdversarialOutcome out;
    out.strategy = strategy.kind;
    out.status = session.abort() ? session.abort()->reason : bob->status();
    out.caught = out.status == Status::AbortCheatDetected;
    out.bits_learned = detail::certain_bits(alice, *bob, inputs);
    out.target_exceeded = static_cast<std::int64_t>(out.bits_learned) > params.m;
    out.forgeries = bob->forgeries();
    out.matches = protocol::count_matches(params, alice, *bob);
    out.family_announced = alice.family().has_value();
    if (out.status == Status::Completed) {
        out.decoded_correctly = true;
        for (auto label : choices.labels()) {
            const auto it = bob->recovered().find(label);
            if (it == bob->recovered().end() || it->second != inputs[label]) out.decoded_correctly = false;
        }
    }

    switch (strategy.kind) {
        case StrategyKind::HonestBob:
        case StrategyKind::LeakyBob:
            out.success = out.status == Status::Completed &&
                          static_cast<std::int64_t>(out.bits_learned) == params.m;
            break;
        case StrategyKind::GreedyBob:
        case StrategyKind::DishonestRemovalBob:
        case StrategyKind::PostponeBob: out.success = out.target_exceeded; break;
        case StrategyKind::CommitCheatBob:
            out.success = !out.caught && static_cast<std::int64_t>(out.forgeries) == params.subset_size;
            break;
        case StrategyKind::CuriousAlice:
            if (alice.family()) {
                out.choice_guess = guess_choices(*alice.family(), static_cast<std::size_t>(params.m));
                auto truth = choices.labels();
                std::sort(truth.begin(), truth.end());
                out.success = *out.choice_guess == truth;
            }
            break;
    }
    if (options.record_transcript) out.transcript = session.take_transcript();
    return out;
}

// Uniform inputs and a uniform choice vector from the "inputs" stream.
inline std::pair<InputBits, ChoiceVector> draw_inputs(const ProtocolParams& params, std::uint64_t seed,
                                                        std::uint64_t trial) {
    RandomSource rng(seed, "inputs", trial);
    std::vector<Bit> bits(static_cast<std::size_t>(params.n));
    for (auto& b : bits) b = rng.bit();
    std::vector<std::size_t> labels(static_cast<std::size_t>(params.n));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i;
    sample_front(std::span<std::size_t>(labels), static_cast<std::size_t>(params.m), rng);
    labels.resize(static_cast<std::size_t>(params.m));
    return {InputBits(std::move(bits), params.n), ChoiceVector::from_zero_based(std::move(labels), params.n, params.m)};
}

inline AdversarialOutcome postpone_bob(const ProtocolParams& params, std::uint64_t seed, std::uint64_t trial = 0) {
    auto [inputs, choices] = draw_inputs(params, seed, trial);
    return run_with_adversary(Strategy::of(StrategyKind::PostponeBob), params, inputs, choices, seed, {trial, false});
}

inline AdversarialOutcome commit_cheat_bob(const ProtocolParams& params, double p, std::uint64_t seed,
                                           std::uint64_t trial = 0) {
    auto [inputs, choices] = draw_inputs(params, seed, trial);
    return run_with_adversary(Strategy::commit_cheat(p), params, inputs, choices, seed, {trial, false});
}

}  // namespace qot::adversary
