#include "rmcnoc/network.hpp"

#include <string>

namespace rmcnoc {

namespace {

Allocation balanced(int subchannels) { return {subchannels / 2, subchannels - subchannels / 2}; }

}  // namespace

MeshNetwork::MeshNetwork(NetworkParams params) : params_(params) {
    const MeshShape& shape = params_.shape;
    if (shape.width < 1 || shape.height < 1) throw std::invalid_argument("mesh dimensions must be positive");
    if (shape.nodes() > 0xFFFF) throw std::invalid_argument("mesh too large");

    const ChannelParams cp{params_.subchannels, params_.buffers_per_subchannel, params_.router_buffers,
                           params_.reversal_latency};
    const Allocation initial = params_.initial_allocation.value_or(balanced(params_.subchannels));

    port_links_.assign(static_cast<std::size_t>(shape.nodes() * kLinkPortCount), PortLink{});
    auto add_channel = [&](int a, int b, bool horizontal) {
        const int id = static_cast<int>(channels_.size());
        channels_.emplace_back(cp, initial);
        links_.push_back({a, b, horizontal});
        const ChannelLink& l = links_.back();
        port_links_[static_cast<std::size_t>(a * kLinkPortCount + index(l.a_port()))] = {id, Direction::AtoB};
        port_links_[static_cast<std::size_t>(b * kLinkPortCount + index(l.b_port()))] = {id, Direction::BtoA};
    };
    for (int y = 0; y < shape.height; ++y)
        for (int x = 0; x + 1 < shape.width; ++x) add_channel(shape.node_id({x, y}), shape.node_id({x + 1, y}), true);
    for (int y = 0; y + 1 < shape.height; ++y)
        for (int x = 0; x < shape.width; ++x) add_channel(shape.node_id({x, y}), shape.node_id({x, y + 1}), false);

    routers_.reserve(static_cast<std::size_t>(shape.nodes()));
    for (int n = 0; n < shape.nodes(); ++n) {
        std::array<bool, kPortCount> links{};
        for (Port p : kLinkPorts) links[static_cast<std::size_t>(index(p))] = port_link(n, p).valid();
        links[static_cast<std::size_t>(index(Port::Local))] = true;
        routers_.emplace_back(shape.coord(n), params_.router_buffers, links);
    }

    capacity_cache_.resize(channels_.size());
    for (int c = 0; c < channel_count(); ++c) {
        for (Direction d : {Direction::AtoB, Direction::BtoA}) {
            const int cap = channels_[static_cast<std::size_t>(c)].capacity(d);
            capacity_cache_[static_cast<std::size_t>(c)][static_cast<std::size_t>(index(d))] = cap;
            auto [node, port] = upstream(c, d);
            router_mut(node).credits[static_cast<std::size_t>(index(port))] = cap;
        }
    }
    sources_.resize(static_cast<std::size_t>(shape.nodes()));
    router_load_.assign(static_cast<std::size_t>(shape.nodes()), 0);
    router_forwarded_.assign(static_cast<std::size_t>(shape.nodes()), 0);
    falsefull_flags_.assign(channels_.size(), 0);
}

PortLink MeshNetwork::port_link(int node, Port p) const {
    if (p == Port::Local) return {};
    return port_links_[static_cast<std::size_t>(node * kLinkPortCount + index(p))];
}

std::string MeshNetwork::channel_key(int c) const {
    const ChannelLink& l = link(c);
    return "ch" + std::to_string(l.a) + "-" + std::to_string(l.b);
}

int MeshNetwork::capacity(int node, Port p) const {
    const PortLink pl = port_link(node, p);
    if (!pl.valid()) return 0;
    return capacity_cache_[static_cast<std::size_t>(pl.channel)][static_cast<std::size_t>(index(pl.outgoing))];
}

std::pair<int, Port> MeshNetwork::downstream(int c, Direction d) const {
    const ChannelLink& l = link(c);
    return d == Direction::AtoB ? std::pair{l.b, l.b_port()} : std::pair{l.a, l.a_port()};
}

std::pair<int, Port> MeshNetwork::upstream(int c, Direction d) const {
    const ChannelLink& l = link(c);
    return d == Direction::AtoB ? std::pair{l.a, l.a_port()} : std::pair{l.b, l.b_port()};
}

void MeshNetwork::enqueue(const Packet& packet) {
    if (!shape().contains(packet.src) || !shape().contains(packet.dst))
        throw std::invalid_argument("packet endpoint outside the mesh");
    if (packet.length < 1) throw std::invalid_argument("packet length must be at least 1");
    if (packet.src == packet.dst) {
        ++counters_.self_delivered_packets;
        return;
    }
    ++counters_.packets_injected;
    counters_.flits_injected += static_cast<std::uint64_t>(packet.length);
    source_resident_ += static_cast<std::uint64_t>(packet.length);
    sources_[static_cast<std::size_t>(shape().node_id(packet.src))].packets.push_back(packet);
}

void MeshNetwork::sync_credits(int c) {
    const RmcChannel& ch = channels_[static_cast<std::size_t>(c)];
    for (Direction d : {Direction::AtoB, Direction::BtoA}) {
        int& cached = capacity_cache_[static_cast<std::size_t>(c)][static_cast<std::size_t>(index(d))];
        const int cap = ch.capacity(d);
        if (cap == cached) continue;
        auto [node, port] = upstream(c, d);
        // Shrinks remove free slots immediately; the counter may dip below zero while
        // the draining subchannel still holds flits.
        router_mut(node).credits[static_cast<std::size_t>(index(port))] += cap - cached;
        cached = cap;
    }
}

void MeshNetwork::request_allocation(int channel, Allocation target) {
    channels_.at(static_cast<std::size_t>(channel)).request_allocation(target);
    sync_credits(channel);
}

void MeshNetwork::step() {
    ejections_.clear();
    inject_phase();
    source_phase();
    channel_phase();
    router_phase();
    credit_phase();
    sample_phase();
    epoch_phase();
    ++cycle_;
}

void MeshNetwork::run(std::uint64_t cycles) {
    for (std::uint64_t i = 0; i < cycles; ++i) step();
}

void MeshNetwork::inject_phase() {
    if (source_ == nullptr) return;
    injection_buffer_.clear();
    source_->generate(cycle_, injection_buffer_);
    for (const Packet& p : injection_buffer_) enqueue(p);
}

void MeshNetwork::source_phase() {
    for (int n = 0; n < shape().nodes(); ++n) {
        SourceQueue& q = sources_[static_cast<std::size_t>(n)];
        if (q.packets.empty()) continue;
        auto& local = router_mut(n).input[static_cast<std::size_t>(index(Port::Local))];
        if (local.full()) continue;
        const Packet& p = q.packets.front();
        Flit f;
        f.packet_id = p.id;
        f.creation_cycle = p.creation_cycle;
        f.injection_cycle = cycle_;
        f.src = static_cast<std::uint16_t>(shape().node_id(p.src));
        f.dst = static_cast<std::uint16_t>(shape().node_id(p.dst));
        f.index = static_cast<std::uint16_t>(q.next_flit);
        f.kind = flit_kind_for(q.next_flit, p.length);
        local.push(f);
        ++router_load_[static_cast<std::size_t>(n)];
        ++counters_.router_buffer_writes;
        --source_resident_;
        last_progress_ = cycle_;
        if (++q.next_flit == p.length) {
            q.packets.pop_front();
            q.next_flit = 0;
        }
    }
}

void MeshNetwork::channel_phase() {
    for (int c = 0; c < channel_count(); ++c) {
        RmcChannel& ch = channels_[static_cast<std::size_t>(c)];
        if (ch.idle()) continue;
        bool changed = ch.tick_switching();
        for (Direction d : {Direction::AtoB, Direction::BtoA}) {
            if (ch.peek_oldest(d) == nullptr) continue;
            auto [node, port] = downstream(c, d);
            auto& buf = router_mut(node).input[static_cast<std::size_t>(index(port))];
            if (buf.full()) continue;
            buf.push(ch.pop_oldest(d, cycle_));
            ++router_load_[static_cast<std::size_t>(node)];
            ++counters_.channel_traversals;
            ++counters_.router_buffer_writes;
            last_progress_ = cycle_;
        }
        changed = ch.settle_draining() || changed;
        if (changed) sync_credits(c);
    }
}

void MeshNetwork::router_phase() {
    credit_returns_.clear();
    for (int n = 0; n < shape().nodes(); ++n) {
        if (router_load_[static_cast<std::size_t>(n)] == 0) continue;
        RouterState& r = router_mut(n);
        OutputReady ready{};
        for (Port p : kLinkPorts) {
            const PortLink pl = port_link(n, p);
            ready[static_cast<std::size_t>(index(p))] =
                pl.valid() && channels_[static_cast<std::size_t>(pl.channel)].can_accept(pl.outgoing);
        }
        ready[static_cast<std::size_t>(index(Port::Local))] = true;
        router_cycle(r, shape(), ready, grants_);
        for (const Grant& g : grants_) {
            Flit f = r.input[static_cast<std::size_t>(index(g.input))].pop();
            --router_load_[static_cast<std::size_t>(n)];
            ++router_forwarded_[static_cast<std::size_t>(n)];
            ++counters_.router_buffer_reads;
            ++counters_.router_traversals;
            last_progress_ = cycle_;
            if (g.input != Port::Local) {
                const PortLink in = port_link(n, g.input);
                auto [up_node, up_port] = upstream(in.channel, opposite(in.outgoing));
                credit_returns_.push_back({up_node, up_port});
            }
            if (g.output == Port::Local) {
                ++counters_.flits_ejected;
                if (closes_packet(f.kind)) ++counters_.packets_ejected;
                ejections_.push_back({f, cycle_});
            } else {
                const PortLink out = port_link(n, g.output);
                channels_[static_cast<std::size_t>(out.channel)].accept(out.outgoing, f, cycle_);
            }
        }
    }
}

void MeshNetwork::credit_phase() {
    for (const CreditReturn& cr : credit_returns_) credit_return(router_mut(cr.node), cr.output, capacity(cr.node, cr.output));
}

void MeshNetwork::sample_phase() {
    for (int c = 0; c < channel_count(); ++c) {
        const bool ff = channels_[static_cast<std::size_t>(c)].detect_falsefull();
        falsefull_flags_[static_cast<std::size_t>(c)] = ff ? 1 : 0;
        counters_.falsefull_cycles += ff ? 1 : 0;
    }
    for (CycleObserver* o : observers_) o->on_cycle(*this);
}

void MeshNetwork::epoch_phase() {
    if (controller_ == nullptr) return;
    const int epoch = controller_->epoch_length();
    if (epoch <= 0 || (cycle_ + 1) % static_cast<std::uint64_t>(epoch) != 0) return;
    controller_->on_epoch(*this);
    for (RmcChannel& ch : channels_) ch.reset_epoch_counters();
}

std::uint64_t MeshNetwork::source_queue_flits(int node) const {
    const SourceQueue& q = sources_[static_cast<std::size_t>(node)];
    std::uint64_t n = 0;
    for (const Packet& p : q.packets) n += static_cast<std::uint64_t>(p.length);
    return n - static_cast<std::uint64_t>(q.next_flit);
}

std::uint64_t MeshNetwork::router_resident_flits() const {
    std::uint64_t n = 0;
    for (const RouterState& r : routers_)
        for (const auto& buf : r.input) n += buf.size();
    return n;
}

std::uint64_t MeshNetwork::channel_resident_flits() const {
    std::uint64_t n = 0;
    for (const RmcChannel& ch : channels_)
        n += static_cast<std::uint64_t>(ch.occupancy(Direction::AtoB) + ch.occupancy(Direction::BtoA));
    return n;
}

std::uint64_t MeshNetwork::completed_reversals() const {
    std::uint64_t n = 0;
    for (const RmcChannel& ch : channels_) n += ch.events().completed_reversals;
    return n;
}

std::uint64_t MeshNetwork::stored_channel_flits() const {
    std::uint64_t n = 0;
    for (const RmcChannel& ch : channels_) n += ch.events().stored_flits;
    return n;
}

void MeshNetwork::check_invariants() const {
    const std::uint64_t resident = source_resident_ + router_resident_flits() + channel_resident_flits();
    if (counters_.flits_injected != counters_.flits_ejected + resident)
        throw SimulationError("flit conservation violated at cycle " + std::to_string(cycle_));
    for (int c = 0; c < channel_count(); ++c) {
        const RmcChannel& ch = channel(c);
        for (Direction d : {Direction::AtoB, Direction::BtoA}) {
            auto [up, up_port] = upstream(c, d);
            auto [down, down_port] = downstream(c, d);
            const int held = ch.occupancy(d) +
                             static_cast<int>(router(down).input[static_cast<std::size_t>(index(down_port))].size());
            if (credits(up, up_port) + held != ch.capacity(d))
                throw SimulationError("credit coherence violated on " + channel_key(c) + " at cycle " +
                                      std::to_string(cycle_));
            if (ch.active_subchannels(d) < 1)
                throw SimulationError("channel " + channel_key(c) + " lost connectivity");
        }
    }
}

}  // namespace rmcnoc
