#include <cmath>

#include <gtest/gtest.h>

#include "qot/commitment.hpp"

namespace {

using qot::RandomSource;
using namespace qot::commitment;

TEST(Commitment, HonestRoundTrip) {
    Ledger ledger;
    const auto zero = ledger.commit(0);
    const auto one = ledger.commit(1);
    const auto o0 = ledger.unveil(zero);
    const auto o1 = ledger.unveil(one);
    EXPECT_EQ(o0.value, 0);
    EXPECT_EQ(o1.value, 1);
    EXPECT_EQ(o0.verdict, Verdict::Accepted);
    EXPECT_EQ(o1.verdict, Verdict::Accepted);
    EXPECT_FALSE(o1.forged);
}

TEST(Commitment, FreshHandles) {
    Ledger ledger;
    const auto a = ledger.commit(1);
    const auto b = ledger.commit(1);
    EXPECT_NE(a.id, b.id);
    EXPECT_EQ(ledger.size(), 2U);
}

TEST(Commitment, DoubleUnveilIsError) {
    Ledger ledger;
    const auto h = ledger.commit(1);
    ledger.unveil(h);
    EXPECT_TRUE(ledger.is_opened(h));
    EXPECT_THROW(ledger.unveil(h), CommitmentError);
}

TEST(Commitment, UnknownHandleIsError) {
    Ledger ledger;
    EXPECT_THROW(ledger.unveil(CommitmentHandle{3}), CommitmentError);
}

TEST(Commitment, ManyHonestPairsNeverRejected) {
    Ledger ledger;
    RandomSource rng(1, "values");
    int rejected = 0;
    for (int i = 0; i < 10000; ++i) {
        const qot::Bit v = rng.bit();
        const auto o = ledger.unveil(ledger.commit(v));
        rejected += o.verdict == Verdict::Rejected || o.value != v;
    }
    EXPECT_EQ(rejected, 0);
}

TEST(Commitment, CheatModelRange) {
    EXPECT_THROW(CheatModel(0.0), std::invalid_argument);
    EXPECT_THROW(CheatModel(1.0), std::invalid_argument);
    EXPECT_NO_THROW(CheatModel(0.5));
}

TEST(Commitment, ForgeryEqualToCommittedIsDisallowed) {
    Ledger ledger;
    RandomSource rng(2, "ledger");
    const auto h = ledger.commit(1);
    EXPECT_THROW(ledger.cheat_unveil(h, 1, CheatModel(0.5), rng), CommitmentError);
}

TEST(Commitment, ForgedAcceptanceRate) {
    Ledger ledger;
    RandomSource rng(3, "ledger");
    const CheatModel cheat(0.5);
    int accepted = 0;
    for (int i = 0; i < 100000; ++i) {
        const auto o = ledger.cheat_unveil(ledger.commit(0), 1, cheat, rng);
        EXPECT_EQ(o.value, 1);
        EXPECT_TRUE(o.forged);
        accepted += o.verdict == Verdict::Accepted;
    }
    EXPECT_GE(accepted / 100000.0, 0.494);
    EXPECT_LE(accepted / 100000.0, 0.506);
}

TEST(Commitment, ForgedUnveilMarksOpened) {
    Ledger ledger;
    RandomSource rng(4, "ledger");
    const auto h = ledger.commit(0);
    ledger.cheat_unveil(h, 1, CheatModel(0.9), rng);
    EXPECT_THROW(ledger.unveil(h), CommitmentError);
}

TEST(Commitment, IndependentForgeriesMultiply) {
    RandomSource rng(5, "ledger");
    const CheatModel cheat(0.5);
    const int trials = 1000000;
    int all = 0;
    for (int t = 0; t < trials; ++t) {
        Ledger ledger;
        bool ok = true;
        for (int k = 0; k < 10 && ok; ++k)
            ok = ledger.cheat_unveil(ledger.commit_unbound(), 1, cheat, rng).verdict == Verdict::Accepted;
        all += ok;
    }
    const double expected = std::pow(0.5, 10);
    EXPECT_NEAR(all / static_cast<double>(trials), expected, 3 * std::sqrt(expected * (1 - expected) / trials));
}

TEST(Commitment, UnboundCannotBeOpenedHonestly) {
    Ledger ledger;
    const auto h = ledger.commit_unbound();
    EXPECT_FALSE(ledger.is_bound(h));
    EXPECT_THROW(ledger.unveil(h), CommitmentError);
}

}  // namespace
