#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace rmcnoc;
using namespace rmcnoc::testing;

TEST(FalsefullOracle, EpochCountsMatchRecount) {
    const FalsefullCheck r = falsefull_recount({2, 2}, 2000, 3);
    EXPECT_EQ(r.epochs, 40u);
    EXPECT_EQ(r.mismatches, 0u);
    EXPECT_EQ(r.reported, r.falsefulls);
    EXPECT_GT(r.falsefulls, 0u);
}

TEST(FalsefullOracle, BruteForceRule) {
    using S = SubchannelSnapshot;
    const auto A = Direction::AtoB, B = Direction::BtoA;
    const auto act = SubchannelState::Active, drain = SubchannelState::Draining;
    // Both AtoB subchannels full, an empty reversible one pointing BtoA.
    EXPECT_TRUE(brute_falsefull({S{act, A, false, 4}, S{act, A, true, 4}, S{act, B, true, 0}, S{act, B, false, 0}}, 4));
    // The only empty BtoA subchannel is pinned.
    EXPECT_FALSE(brute_falsefull({S{act, A, false, 4}, S{act, A, true, 4}, S{act, B, true, 1}, S{act, B, false, 0}}, 4));
    // A draining subchannel is not a spare.
    EXPECT_FALSE(brute_falsefull({S{act, A, false, 4}, S{act, A, true, 4}, S{drain, B, true, 0}, S{act, B, false, 0}}, 4));
}

TEST(ReversalOracle, NetworkNeverLosesOrDuplicates) {
    EXPECT_EQ(network_reversal_fuzz({4, 4}, 4000, 5), "");
    EXPECT_EQ(channel_reversal_fuzz(6, 2000, 9), "");
    EXPECT_EQ(empty_reversal_cycles(), 5);
}

TEST(ConservationOracle, ShortFuzz) {
    EXPECT_EQ(conservation_fuzz({2, 2}, 5000, 1), "");
    EXPECT_EQ(conservation_fuzz({4, 4}, 5000, 2), "");
}

TEST(TabularOracle, ShortRun) { EXPECT_LT(tabular_oracle_error(200, 4), 1e-12); }
