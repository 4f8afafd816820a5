#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rmcnoc/ring_fifo.hpp"
#include "rmcnoc/types.hpp"

namespace rmcnoc {

/// Flow direction on a channel. Endpoint A is the west (or north) router, B the east (or south).
enum class Direction : std::uint8_t { AtoB = 0, BtoA = 1 };

constexpr int index(Direction d) { return static_cast<int>(d); }
constexpr Direction opposite(Direction d) { return d == Direction::AtoB ? Direction::BtoA : Direction::AtoB; }

enum class SubchannelState : std::uint8_t { Active, Draining, Switching };

/// Split of subchannels between the two directions, counted by target direction.
struct Allocation {
    int a_to_b = 0;
    int b_to_a = 0;

    int operator[](Direction d) const { return d == Direction::AtoB ? a_to_b : b_to_a; }
    friend bool operator==(const Allocation&, const Allocation&) = default;
};

class InvalidAllocation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Subchannel {
    int id = 0;
    std::optional<Direction> fixed_direction;
    Direction current = Direction::AtoB;
    Direction target = Direction::AtoB;
    SubchannelState state = SubchannelState::Active;
    int countdown = 0;
    RingFifo<Flit> fifo;

    bool reversible() const { return !fixed_direction.has_value(); }
    bool active_in(Direction d) const { return state == SubchannelState::Active && current == d; }
};

struct ChannelParams {
    int subchannels = 4;
    int buffers_per_subchannel = 4;
    int router_buffers = 2;
    int reversal_latency = 5;
};

/// Per-channel event counts since construction.
struct ChannelEvents {
    std::uint64_t completed_reversals = 0;
    std::uint64_t stored_flits = 0;  ///< flits that waited in a channel buffer beyond the minimum
};

/// Reversible multi-function channel: S subchannel FIFOs shared between two directions.
///
/// One subchannel is pinned to each direction. The rest reverse through
/// Active -> Draining (write-disabled, zero capacity) -> Switching(countdown) -> Active.
/// Within a direction all subchannel FIFOs form one logical queue; flits leave in
/// entry order.
class RmcChannel {
public:
    RmcChannel(ChannelParams params, Allocation initial);

    const ChannelParams& params() const { return params_; }
    int subchannel_count() const { return static_cast<int>(subs_.size()); }
    const std::vector<Subchannel>& subchannels() const { return subs_; }

    /// Allocation counted by target direction (Active + Draining + Switching).
    Allocation allocation() const;
    bool is_valid(Allocation a) const;

    /// Router buffers plus the buffers of Active subchannels in `d`; backs the upstream credit counter.
    int capacity(Direction d) const;
    int active_subchannels(Direction d) const { return active_[index(d)]; }
    /// Flits held in subchannels currently carrying `d` (Active or Draining).
    int occupancy(Direction d) const { return static_cast<int>(order_[index(d)].size()); }
    bool can_accept(Direction d) const;

    /// Upstream router writes one flit into the direction's logical queue.
    void accept(Direction d, const Flit& flit, std::uint64_t cycle);
    /// Oldest flit travelling in `d`, if any.
    const Flit* peek_oldest(Direction d) const;
    /// Removes the oldest flit in `d` and counts it as a traversal in `d`.
    Flit pop_oldest(Direction d, std::uint64_t cycle);

    /// Counts down Switching subchannels; expired ones become Active the other way.
    /// Returns true when any capacity changed.
    bool tick_switching();
    /// Moves empty Draining subchannels into Switching. Returns true when any capacity changed.
    bool settle_draining();

    /// No flits held and no reversal in progress.
    bool idle() const { return order_[0].empty() && order_[1].empty() && switching_ == 0 && draining_ == 0; }

    /// Starts (or retargets) a reconfiguration toward `target`.
    void request_allocation(Allocation target);

    /// Falsefull: some direction has every Active FIFO full while the other has an empty,
    /// Active, reversible subchannel.
    bool falsefull() const;
    /// Evaluated once per cycle; increments the epoch counter when true.
    bool detect_falsefull() {
        if (!falsefull_possible()) return false;
        const bool ff = falsefull();
        falsefull_epoch_count_ += ff ? 1 : 0;
        return ff;
    }

    int falsefull_epoch_count() const { return falsefull_epoch_count_; }
    std::array<std::uint64_t, 2> traversals() const { return traversals_; }
    void count_traversal(Direction d) { ++traversals_[index(d)]; }
    void reset_epoch_counters();

    const ChannelEvents& events() const { return events_; }

private:
    // Necessary condition for falsefull: a direction holds at least as many flits as its
    // Active slots, and something besides the pinned subchannel is Active the other way.
    bool falsefull_possible() const {
        const int cb = params_.buffers_per_subchannel;
        return (occupancy(Direction::AtoB) >= cb * active_[0] && active_[1] >= 2) ||
               (occupancy(Direction::BtoA) >= cb * active_[1] && active_[0] >= 2);
    }
    void sync_state(Subchannel& s);
    void set_state(Subchannel& s, SubchannelState state);
    int pick_for_flip(Direction toward) const;
    void recount();

    ChannelParams params_;
    std::vector<Subchannel> subs_;
    std::array<RingFifo<std::uint8_t>, 2> order_;
    int falsefull_epoch_count_ = 0;
    std::array<std::uint64_t, 2> traversals_{};
    ChannelEvents events_;
    std::array<int, 2> active_{};  ///< Active subchannels per current direction
    int switching_ = 0;
    int draining_ = 0;
};

}  // namespace rmcnoc
