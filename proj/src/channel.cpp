#include "rmcnoc/channel.hpp"

#include <string>

namespace rmcnoc {

RmcChannel::RmcChannel(ChannelParams params, Allocation initial) : params_(params) {
    const int s = params_.subchannels;
    if (s < 2) throw std::invalid_argument("RMC channel needs at least two subchannels");
    if (params_.buffers_per_subchannel < 1 || params_.router_buffers < 1 || params_.reversal_latency < 0)
        throw std::invalid_argument("RMC channel buffer counts must be positive");

    subs_.resize(static_cast<std::size_t>(s));
    for (int i = 0; i < s; ++i) {
        Subchannel& sub = subs_[static_cast<std::size_t>(i)];
        sub.id = i;
        sub.fifo = RingFifo<Flit>(static_cast<std::size_t>(params_.buffers_per_subchannel));
    }
    subs_[0].fixed_direction = Direction::AtoB;
    subs_[1].fixed_direction = Direction::BtoA;
    subs_[1].current = subs_[1].target = Direction::BtoA;

    if (!is_valid(initial))
        throw InvalidAllocation("invalid initial allocation (" + std::to_string(initial.a_to_b) + "," +
                                std::to_string(initial.b_to_a) + ")");
    int remaining_ab = initial.a_to_b - 1;
    for (int i = 2; i < s; ++i) {
        Direction d = remaining_ab-- > 0 ? Direction::AtoB : Direction::BtoA;
        subs_[static_cast<std::size_t>(i)].current = subs_[static_cast<std::size_t>(i)].target = d;
    }

    const auto slots = static_cast<std::size_t>(s * params_.buffers_per_subchannel);
    order_ = {RingFifo<std::uint8_t>(slots), RingFifo<std::uint8_t>(slots)};
    recount();
}

void RmcChannel::recount() {
    active_ = {};
    switching_ = draining_ = 0;
    for (const Subchannel& sub : subs_) {
        if (sub.state == SubchannelState::Active) ++active_[index(sub.current)];
        if (sub.state == SubchannelState::Switching) ++switching_;
        if (sub.state == SubchannelState::Draining) ++draining_;
    }
}

void RmcChannel::set_state(Subchannel& sub, SubchannelState state) {
    auto adjust = [&](int delta) {
        if (sub.state == SubchannelState::Active) active_[index(sub.current)] += delta;
        if (sub.state == SubchannelState::Switching) switching_ += delta;
        if (sub.state == SubchannelState::Draining) draining_ += delta;
    };
    adjust(-1);
    sub.state = state;
    adjust(+1);
}

Allocation RmcChannel::allocation() const {
    Allocation a;
    for (const Subchannel& sub : subs_) {
        if (sub.target == Direction::AtoB)
            ++a.a_to_b;
        else
            ++a.b_to_a;
    }
    return a;
}

bool RmcChannel::is_valid(Allocation a) const {
    const int s = subchannel_count();
    return a.a_to_b >= 1 && a.b_to_a >= 1 && a.a_to_b <= s - 1 && a.b_to_a <= s - 1 && a.a_to_b + a.b_to_a == s;
}

int RmcChannel::capacity(Direction d) const {
    return params_.router_buffers + params_.buffers_per_subchannel * active_[index(d)];
}

bool RmcChannel::can_accept(Direction d) const {
    if (occupancy(d) < params_.buffers_per_subchannel) return true;
    for (const Subchannel& sub : subs_)
        if (sub.active_in(d) && !sub.fifo.full()) return true;
    return false;
}

void RmcChannel::accept(Direction d, const Flit& flit, std::uint64_t cycle) {
    for (Subchannel& sub : subs_) {
        if (sub.active_in(d) && !sub.fifo.full()) {
            Flit f = flit;
            f.channel_entry_cycle = cycle;
            sub.fifo.push(f);
            order_[index(d)].push(static_cast<std::uint8_t>(sub.id));
            return;
        }
    }
    throw SimulationError("flit written into a full channel direction");
}

const Flit* RmcChannel::peek_oldest(Direction d) const {
    const auto& order = order_[index(d)];
    if (order.empty()) return nullptr;
    return &subs_[order.front()].fifo.front();
}

Flit RmcChannel::pop_oldest(Direction d, std::uint64_t cycle) {
    auto& order = order_[index(d)];
    if (order.empty()) throw SimulationError("pop from an empty channel direction");
    Subchannel& sub = subs_[order.pop()];
    Flit f = sub.fifo.pop();
    if (cycle > f.channel_entry_cycle + 1) ++events_.stored_flits;
    count_traversal(d);
    return f;
}

bool RmcChannel::tick_switching() {
    if (switching_ == 0) return false;
    bool changed = false;
    for (Subchannel& sub : subs_) {
        if (sub.state != SubchannelState::Switching) continue;
        if (--sub.countdown > 0) continue;
        sub.current = opposite(sub.current);
        set_state(sub, SubchannelState::Active);
        ++events_.completed_reversals;
        changed = true;
        // Retargeted while switching: head straight back.
        sync_state(sub);
    }
    return changed;
}

bool RmcChannel::settle_draining() {
    if (draining_ == 0) return false;
    bool changed = false;
    for (Subchannel& sub : subs_) {
        if (sub.state == SubchannelState::Draining && sub.fifo.empty()) {
            set_state(sub, SubchannelState::Switching);
            sub.countdown = params_.reversal_latency;
            if (sub.countdown == 0) {
                sub.current = opposite(sub.current);
                set_state(sub, SubchannelState::Active);
                ++events_.completed_reversals;
                changed = true;
            }
        }
    }
    return changed;
}

void RmcChannel::sync_state(Subchannel& sub) {
    if (sub.state == SubchannelState::Active && sub.target != sub.current)
        set_state(sub, SubchannelState::Draining);
    else if (sub.state == SubchannelState::Draining && sub.target == sub.current)
        set_state(sub, SubchannelState::Active);
}

// Chooses a reversible subchannel currently targeted away from `toward` to retarget.
// Preference: cancel a drain, then the emptiest Active one, then one mid-switch.
int RmcChannel::pick_for_flip(Direction toward) const {
    int best = -1;
    int best_rank = 0;
    std::size_t best_fill = 0;
    for (const Subchannel& sub : subs_) {
        if (!sub.reversible() || sub.target == toward) continue;
        int rank = 0;
        if (sub.state == SubchannelState::Draining)
            rank = 3;
        else if (sub.state == SubchannelState::Active)
            rank = 2;
        else
            rank = 1;
        const std::size_t fill = sub.fifo.size();
        const bool better = best < 0 || rank > best_rank || (rank == best_rank && rank == 2 && fill <= best_fill);
        if (better) {
            best = sub.id;
            best_rank = rank;
            best_fill = fill;
        }
    }
    return best;
}

void RmcChannel::request_allocation(Allocation target) {
    if (!is_valid(target))
        throw InvalidAllocation("invalid allocation (" + std::to_string(target.a_to_b) + "," +
                                std::to_string(target.b_to_a) + ") for " + std::to_string(subchannel_count()) +
                                " subchannels");
    int delta = target.a_to_b - allocation().a_to_b;
    while (delta != 0) {
        const Direction toward = delta > 0 ? Direction::AtoB : Direction::BtoA;
        const int id = pick_for_flip(toward);
        if (id < 0) throw SimulationError("no reversible subchannel available for reallocation");
        subs_[static_cast<std::size_t>(id)].target = toward;
        delta += delta > 0 ? -1 : 1;
    }
    for (Subchannel& sub : subs_) sync_state(sub);
    settle_draining();
}

bool RmcChannel::falsefull() const {
    for (Direction d : {Direction::AtoB, Direction::BtoA}) {
        bool all_full = true;
        bool any_active = false;
        bool spare_opposite = false;
        for (const Subchannel& sub : subs_) {
            if (sub.active_in(d)) {
                any_active = true;
                all_full = all_full && sub.fifo.full();
            } else if (sub.active_in(opposite(d)) && sub.reversible() && sub.fifo.empty()) {
                spare_opposite = true;
            }
        }
        if (any_active && all_full && spare_opposite) return true;
    }
    return false;
}

void RmcChannel::reset_epoch_counters() {
    falsefull_epoch_count_ = 0;
    traversals_ = {};
}

}  // namespace rmcnoc
