#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "rmcnoc/channel.hpp"

using namespace rmcnoc;

namespace {

ChannelParams defaults() { return {4, 4, 2, 5}; }

Flit flit(std::uint64_t id) {
    Flit f;
    f.packet_id = id;
    return f;
}

/// One cycle of the channel's own bookkeeping with no exits in between.
void tick(RmcChannel& ch) {
    ch.tick_switching();
    ch.settle_draining();
}

int active_count(const RmcChannel& ch, Direction d) {
    int n = 0;
    for (const Subchannel& s : ch.subchannels())
        if (s.active_in(d)) ++n;
    return n;
}

}  // namespace

TEST(ChannelCapacity, ThreeOneSplit) {
    RmcChannel ch(defaults(), {3, 1});
    EXPECT_EQ(ch.capacity(Direction::AtoB), 14);
    EXPECT_EQ(ch.capacity(Direction::BtoA), 6);
}

TEST(ChannelCapacity, Balanced) {
    RmcChannel ch(defaults(), {2, 2});
    EXPECT_EQ(ch.capacity(Direction::AtoB), 10);
    EXPECT_EQ(ch.capacity(Direction::BtoA), 10);
}

TEST(ChannelCapacity, DrainingSubchannelContributesNothing) {
    RmcChannel ch(defaults(), {2, 2});
    ch.accept(Direction::AtoB, flit(1), 0);
    ch.accept(Direction::AtoB, flit(2), 0);
    ch.accept(Direction::AtoB, flit(3), 0);
    ch.accept(Direction::AtoB, flit(4), 0);
    ch.accept(Direction::AtoB, flit(5), 0);  // spills into the reversible AtoB subchannel
    ch.request_allocation({1, 3});
    tick(ch);
    EXPECT_EQ(ch.capacity(Direction::AtoB), 6);
    EXPECT_EQ(ch.allocation(), (Allocation{1, 3}));
}

TEST(ChannelAllocation, RejectsInvalidTargets) {
    RmcChannel ch(defaults(), {2, 2});
    EXPECT_THROW(ch.request_allocation({0, 4}), InvalidAllocation);
    EXPECT_THROW(ch.request_allocation({4, 0}), InvalidAllocation);
    EXPECT_THROW(ch.request_allocation({2, 3}), InvalidAllocation);
    EXPECT_EQ(ch.allocation(), (Allocation{2, 2}));
    EXPECT_THROW(RmcChannel(defaults(), {0, 4}), InvalidAllocation);
}

TEST(ChannelAllocation, SameTargetIsNoOp) {
    RmcChannel ch(defaults(), {2, 2});
    const auto before = ch.subchannels();
    ch.request_allocation({2, 2});
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_EQ(ch.subchannels()[i].state, before[i].state);
        EXPECT_EQ(ch.subchannels()[i].current, before[i].current);
    }
}

TEST(ChannelTransmit, FifoOrderAcrossSubchannels) {
    RmcChannel ch(defaults(), {3, 1});
    for (std::uint64_t i = 0; i < 12; ++i) ch.accept(Direction::AtoB, flit(i), i);
    EXPECT_FALSE(ch.can_accept(Direction::AtoB));
    for (std::uint64_t i = 0; i < 12; ++i) EXPECT_EQ(ch.pop_oldest(Direction::AtoB, 20 + i).packet_id, i);
    EXPECT_EQ(ch.traversals()[0], 12u);
    EXPECT_EQ(ch.traversals()[1], 0u);
}

TEST(ChannelTransmit, StorageModeHoldsEverySlot) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 8; ++i) {
        ASSERT_TRUE(ch.can_accept(Direction::AtoB));
        ch.accept(Direction::AtoB, flit(i), i);
    }
    EXPECT_FALSE(ch.can_accept(Direction::AtoB));
    EXPECT_EQ(ch.occupancy(Direction::AtoB), 8);
}

TEST(ChannelTraversals, CountAndReset) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 3; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    for (int i = 0; i < 3; ++i) ch.pop_oldest(Direction::AtoB, 1);
    EXPECT_EQ(ch.traversals(), (std::array<std::uint64_t, 2>{3, 0}));
    ch.reset_epoch_counters();
    EXPECT_EQ(ch.traversals(), (std::array<std::uint64_t, 2>{0, 0}));
}

TEST(ChannelTraversals, DrainingFlitCountsInOriginalDirection) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 6; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    ch.request_allocation({1, 3});
    for (int i = 0; i < 6; ++i) ch.pop_oldest(Direction::AtoB, 1);
    EXPECT_EQ(ch.traversals()[0], 6u);
}

TEST(ChannelReversal, EmptySubchannelTakesBaseLatency) {
    RmcChannel ch(defaults(), {2, 2});
    ch.request_allocation({3, 1});
    int cycles = 0;
    while (active_count(ch, Direction::AtoB) < 3) {
        tick(ch);
        ++cycles;
        ASSERT_LT(cycles, 100);
    }
    EXPECT_EQ(cycles, 5);
    EXPECT_EQ(ch.capacity(Direction::AtoB), 14);
}

TEST(ChannelReversal, FullSubchannelDrainsThenSwitches) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 8; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    // Only the reversible subchannel is asked to flip; the pinned one keeps its flits.
    ch.request_allocation({1, 3});
    int cycles = 0;
    std::vector<std::uint64_t> out;
    while (active_count(ch, Direction::BtoA) < 3) {
        ch.tick_switching();
        ++cycles;
        if (ch.occupancy(Direction::AtoB) > 0) out.push_back(ch.pop_oldest(Direction::AtoB, cycles).packet_id);
        ch.settle_draining();
        ASSERT_LT(cycles, 100);
    }
    while (ch.occupancy(Direction::AtoB) > 0) out.push_back(ch.pop_oldest(Direction::AtoB, 0).packet_id);
    std::vector<std::uint64_t> expect{0, 1, 2, 3, 4, 5, 6, 7};
    EXPECT_EQ(out, expect);
    // The reversible subchannel holds flits 4..7 behind the pinned one's 0..3, so its four flits
    // leave during cycles 5..8, then 5 switching cycles follow.
    EXPECT_EQ(cycles, 8 + 5);
}

TEST(ChannelReversal, FlipPrefersEmptySubchannel) {
    RmcChannel ch(defaults(), {3, 1});
    // Pinned AtoB subchannel (id 0) stays empty; subchannel 2 holds four flits.
    for (std::uint64_t i = 0; i < 4; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    ASSERT_EQ(ch.subchannels()[0].fifo.size(), 4u);
    ch.request_allocation({2, 2});
    // Which subchannel flips is the channel's choice: the emptiest Active one is preferred.
    int cycles = 0;
    while (active_count(ch, Direction::BtoA) < 2) {
        tick(ch);
        ++cycles;
        ASSERT_LT(cycles, 100);
    }
    EXPECT_EQ(cycles, 5);
}

TEST(ChannelReversal, FourFlitsDrainInNineCycles) {
    ChannelParams p{3, 4, 2, 5};
    RmcChannel ch(p, {2, 1});
    for (std::uint64_t i = 0; i < 8; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    // Move the pinned subchannel's four flits out so only subchannel 2 (the reversible one) holds flits.
    for (int i = 0; i < 4; ++i) ch.pop_oldest(Direction::AtoB, 0);
    ASSERT_EQ(ch.occupancy(Direction::AtoB), 4);
    ch.request_allocation({1, 2});
    int cycles = 0;
    int delivered = 0;
    while (active_count(ch, Direction::BtoA) < 2) {
        ch.tick_switching();
        ++cycles;
        if (ch.occupancy(Direction::AtoB) > 0) {
            ch.pop_oldest(Direction::AtoB, cycles);
            ++delivered;
        }
        ch.settle_draining();
        ASSERT_LT(cycles, 100);
    }
    EXPECT_EQ(delivered, 4);
    EXPECT_EQ(cycles, 4 + 5);
}

TEST(ChannelReversal, RetargetCancelsDrain) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 6; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    ch.request_allocation({1, 3});
    tick(ch);
    EXPECT_EQ(ch.capacity(Direction::AtoB), 6);
    ch.request_allocation({2, 2});
    EXPECT_EQ(ch.capacity(Direction::AtoB), 10);
    EXPECT_EQ(ch.allocation(), (Allocation{2, 2}));
}

TEST(ChannelFalsefull, FullDirectionWithEmptyReversibleOpposite) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 8; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    EXPECT_TRUE(ch.falsefull());
    EXPECT_TRUE(ch.detect_falsefull());
    EXPECT_EQ(ch.falsefull_epoch_count(), 1);
}

TEST(ChannelFalsefull, OnlyFixedSubchannelEmpty) {
    RmcChannel ch(defaults(), {3, 1});
    for (std::uint64_t i = 0; i < 12; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    EXPECT_FALSE(ch.falsefull());
    EXPECT_FALSE(ch.detect_falsefull());
    EXPECT_EQ(ch.falsefull_epoch_count(), 0);
}

TEST(ChannelFalsefull, PartlyFilledIsNotFalsefull) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 7; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    for (std::uint64_t i = 0; i < 3; ++i) ch.accept(Direction::BtoA, flit(100 + i), 0);
    EXPECT_FALSE(ch.falsefull());
}

TEST(ChannelFalsefull, OppositeReversibleNotEmpty) {
    RmcChannel ch(defaults(), {2, 2});
    for (std::uint64_t i = 0; i < 8; ++i) ch.accept(Direction::AtoB, flit(i), 0);
    for (std::uint64_t i = 0; i < 5; ++i) ch.accept(Direction::BtoA, flit(100 + i), 0);
    EXPECT_FALSE(ch.falsefull());
}

TEST(ChannelFuzz, ReversalsNeverLoseOrDuplicateFlits) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int s = 4 + 2 * (trial % 3);
        RmcChannel ch({s, 1 + trial % 4, 2, 5}, {s / 2, s - s / 2});
        std::uint64_t next = 0;
        std::array<std::vector<std::uint64_t>, 2> in, out;
        for (int cycle = 0; cycle < 5000; ++cycle) {
            ch.tick_switching();
            for (Direction d : {Direction::AtoB, Direction::BtoA})
                if (ch.occupancy(d) > 0 && rng() % 3 != 0) out[index(d)].push_back(ch.pop_oldest(d, cycle).packet_id);
            ch.settle_draining();
            for (Direction d : {Direction::AtoB, Direction::BtoA}) {
                const int k = index(d);
                if (ch.can_accept(d) && rng() % 2 == 0) {
                    in[k].push_back(next);
                    ch.accept(d, flit(next++), cycle);
                }
            }
            if (rng() % 17 == 0) {
                const int ab = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(s - 1));
                ch.request_allocation({ab, s - ab});
            }
            ASSERT_GE(active_count(ch, Direction::AtoB), 1);
            ASSERT_GE(active_count(ch, Direction::BtoA), 1);
        }
        for (Direction d : {Direction::AtoB, Direction::BtoA})
            while (ch.occupancy(d) > 0) out[index(d)].push_back(ch.pop_oldest(d, 0).packet_id);
        EXPECT_EQ(in[0], out[0]);
        EXPECT_EQ(in[1], out[1]);
    }
}
