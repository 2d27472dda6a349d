#include <cmath>

#include <gtest/gtest.h>

#include "qot/adversary.hpp"
#include "qot/oracle.hpp"

namespace {

using namespace qot;
using namespace qot::adversary;

struct Tally {
    int trials = 0;
    int caught = 0;
    int success = 0;
    int announced = 0;
};

template <class Check>
Tally sweep(const Strategy& s, const ProtocolParams& params, int trials, std::uint64_t seed, Check check) {
    Tally t;
    for (int i = 0; i < trials; ++i) {
        auto [inputs, choices] = draw_inputs(params, seed, static_cast<std::uint64_t>(i));
        const auto o = run_with_adversary(s, params, inputs, choices, seed, {static_cast<std::uint64_t>(i), false});
        check(o);
        ++t.trials;
        t.caught += o.caught;
        t.success += o.success;
        t.announced += o.family_announced;
    }
    return t;
}

double sigma3(double p, int trials) { return 3 * std::sqrt(p * (1 - p) / trials) + 0.5 / trials; }

TEST(Strategy, Names) {
    for (auto k : {StrategyKind::HonestBob, StrategyKind::GreedyBob, StrategyKind::DishonestRemovalBob,
                   StrategyKind::PostponeBob, StrategyKind::CommitCheatBob, StrategyKind::CuriousAlice,
                   StrategyKind::LeakyBob})
        EXPECT_EQ(strategy_from_string(to_string(k)), k);
    EXPECT_FALSE(strategy_from_string("Greedy"));
    EXPECT_THROW(Strategy::commit_cheat(1.0), std::invalid_argument);
    EXPECT_THROW(Strategy::commit_cheat(0.0), std::invalid_argument);
    EXPECT_NO_THROW(Strategy::commit_cheat(0.3));
}

TEST(Strategy, PreconditionsEnforced) {
    const auto high = validate_params(2, 1, 6);
    auto [inputs, choices] = draw_inputs(high, 1, 0);
    EXPECT_THROW(run_with_adversary(Strategy::of(StrategyKind::DishonestRemovalBob), high, inputs, choices, 1),
                 std::invalid_argument);
    EXPECT_THROW(run_with_adversary(Strategy::of(StrategyKind::CommitCheatBob), high, inputs, choices, 1),
                 std::invalid_argument);
}

TEST(Honest, SameAsPlainProtocol) {
    const auto params = validate_params(4, 1, 40);
    for (std::uint64_t t = 0; t < 200; ++t) {
        auto [inputs, choices] = draw_inputs(params, 3, t);
        const auto a = run_with_adversary(Strategy::honest(), params, inputs, choices, 3, {t, false});
        const auto b = protocol::run_protocol(params, inputs, choices, 3, {{}, t});
        ASSERT_EQ(a.status, b.status);
        ASSERT_EQ(a.matches, b.matches);
        ASSERT_EQ(a.success, b.status == protocol::Status::Completed);
        ASSERT_EQ(a.decoded_correctly, a.success);
        ASSERT_FALSE(a.target_exceeded);
    }
}

TEST(Greedy, SuccessIsExactlyTheOracleEvent) {
    for (auto [n, m, N] : {std::tuple{2, 1, 6}, {4, 1, 40}, {5, 2, 10}}) {
        const auto params = validate_params(n, m, N);
        sweep(Strategy::of(StrategyKind::GreedyBob), params, 1500, 5, [&](const AdversarialOutcome& o) {
            ASSERT_FALSE(o.caught);
            ASSERT_EQ(o.target_exceeded, oracle::event_holds(oracle::Event::PrivacyGreedy, params, o.matches));
            if (o.status == protocol::Status::Completed) { ASSERT_TRUE(o.decoded_correctly); }
        });
    }
}

TEST(Greedy, RateNearOracle) {
    const auto params = validate_params(2, 1, 6);
    const auto t = sweep(Strategy::of(StrategyKind::GreedyBob), params, 8000, 6, [](const AdversarialOutcome&) {});
    EXPECT_NEAR(t.success / 8000.0, 15.0 / 64, sigma3(15.0 / 64, 8000));
}

TEST(DishonestRemoval, LiteralAliceNeverNotices) {
    const auto params = validate_params(4, 1, 40);
    const auto t = sweep(Strategy::of(StrategyKind::DishonestRemovalBob), params, 3000, 7, [&](const AdversarialOutcome& o) {
        ASSERT_FALSE(o.caught);
        ASSERT_EQ(o.target_exceeded, oracle::event_holds(oracle::Event::DishonestRemoval, params, o.matches));
    });
    const double p = oracle::exact_failure_oracle(params, oracle::Event::DishonestRemoval).value;
    EXPECT_NEAR(t.success / 3000.0, p, sigma3(p, 3000));
}

TEST(DishonestRemoval, StrictAliceCatchesIt) {
    const auto params = validate_params(4, 1, 40);
    Strategy s = Strategy::of(StrategyKind::DishonestRemovalBob);
    s.strict_alice = true;
    const auto t = sweep(s, params, 1000, 8, [](const AdversarialOutcome& o) { ASSERT_FALSE(o.success); });
    EXPECT_GE(t.caught, 990);
}

TEST(DishonestRemoval, StrictAliceLeavesHonestBobAlone) {
    const auto params = validate_params(4, 1, 40);
    Strategy s = Strategy::honest();
    s.strict_alice = true;
    const auto t = sweep(s, params, 500, 8, [](const AdversarialOutcome&) {});
    EXPECT_EQ(t.caught, 0);
}

TEST(Postpone, CaughtAtAQuarterPerChallenge) {
    const auto params = validate_params(2, 1, 6);
    const int trials = 8000;
    const auto t = sweep(Strategy::of(StrategyKind::PostponeBob), params, trials, 9, [](const AdversarialOutcome& o) {
        if (!o.caught) { ASSERT_NE(o.status, protocol::Status::AbortInvalidMessage); }
    });
    const double survival = std::pow(0.75, 6);
    EXPECT_NEAR((trials - t.caught) / static_cast<double>(trials), survival, sigma3(survival, trials));
    EXPECT_LE(t.success, trials - t.caught);
}

TEST(Postpone, LargeNAlwaysCaught) {
    const auto params = validate_params(4, 1, 40);
    int survived = 0;
    for (std::uint64_t t = 0; t < 2000; ++t) survived += !postpone_bob(params, 10, t).caught;
    EXPECT_EQ(survived, 0);
}

TEST(Postpone, SurvivorsLearnEverything) {
    // Surviving the challenges leaves Bob knowing every bit in Alice's basis.
    const auto params = validate_params(3, 1, 6);
    int survived = 0;
    int exceeded = 0;
    for (std::uint64_t t = 0; t < 4000; ++t) {
        const auto o = postpone_bob(params, 11, t);
        if (o.caught) continue;
        ++survived;
        exceeded += o.target_exceeded;
        if (o.status == protocol::Status::Completed) { EXPECT_EQ(o.bits_learned, 3U); }
    }
    EXPECT_GT(survived, 500);
    EXPECT_GT(exceeded, survived * 9 / 10);
}

TEST(CommitCheat, SuccessIsPToTheSubsetSize) {
    const auto params = validate_params(2, 1, 6);  // s = 2
    const int trials = 8000;
    const auto t = sweep(Strategy::commit_cheat(0.5), params, trials, 12, [&](const AdversarialOutcome& o) {
        ASSERT_LE(o.forgeries, static_cast<std::size_t>(params.subset_size));
        if (o.success) { ASSERT_FALSE(o.caught); }
    });
    EXPECT_NEAR(t.success / static_cast<double>(trials), 0.25, sigma3(0.25, trials));
}

TEST(CommitCheat, HighAcceptanceSucceedsOften) {
    const auto params = validate_params(4, 1, 40);
    int success = 0;
    for (std::uint64_t t = 0; t < 2000; ++t) success += commit_cheat_bob(params, 0.95, 13, t).success;
    const double p = std::pow(0.95, 8);
    EXPECT_NEAR(success / 2000.0, p, sigma3(p, 2000));
}

TEST(CommitCheat, TranscriptShowsForgedUnveils) {
    const auto params = validate_params(4, 1, 40);
    auto [inputs, choices] = draw_inputs(params, 14, 0);
    const auto o = run_with_adversary(Strategy::commit_cheat(0.9), params, inputs, choices, 14, {0, true});
    ASSERT_TRUE(o.transcript);
    std::size_t forged = 0;
    for (const auto& e : o.transcript->entries())
        if (e.kind == "cheat_unveil") ++forged;
    EXPECT_EQ(forged, o.forgeries);
    EXPECT_GT(forged, 0U);
}

TEST(CuriousAlice, NoBetterThanGuessing) {
    const auto params = validate_params(3, 1, 6);
    const auto t =
        sweep(Strategy::of(StrategyKind::CuriousAlice), params, 9000, 15, [](const AdversarialOutcome& o) {
            if (o.family_announced) { ASSERT_TRUE(o.choice_guess); }
            if (o.status == protocol::Status::Completed) { ASSERT_TRUE(o.decoded_correctly); }
        });
    EXPECT_NEAR(t.success / static_cast<double>(t.announced), 1.0 / 3, sigma3(1.0 / 3, t.announced));
}

TEST(CuriousAlice, GuessHeuristic) {
    protocol::SubsetFamily family{{{3, 4}, {0, 5}, {1, 2}}};
    EXPECT_EQ(guess_choices(family, 1), (std::vector<std::size_t>{1}));
    EXPECT_EQ(guess_choices(family, 2), (std::vector<std::size_t>{1, 2}));
    EXPECT_EQ(guess_choices(family, 3), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Leaky, StillDecodesCorrectly) {
    const auto params = validate_params(3, 1, 6);
    sweep(Strategy::of(StrategyKind::LeakyBob), params, 1000, 16, [](const AdversarialOutcome& o) {
        ASSERT_FALSE(o.caught);
        if (o.status == protocol::Status::Completed) { ASSERT_TRUE(o.decoded_correctly); }
    });
}

TEST(Inputs, DrawIsDeterministicAndUniform) {
    const auto params = validate_params(3, 1, 6);
    std::array<int, 3> counts{};
    for (std::uint64_t t = 0; t < 6000; ++t) {
        auto [a, ca] = draw_inputs(params, 17, t);
        auto [b, cb] = draw_inputs(params, 17, t);
        ASSERT_EQ(a.bits(), b.bits());
        ASSERT_EQ(ca.labels(), cb.labels());
        ++counts[ca.labels()[0]];
    }
    for (int c : counts) { EXPECT_NEAR(c / 6000.0, 1.0 / 3, 0.03); }
}

}  // namespace
