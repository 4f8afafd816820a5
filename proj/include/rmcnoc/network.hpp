#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmcnoc/channel.hpp"
#include "rmcnoc/router.hpp"
#include "rmcnoc/types.hpp"

namespace rmcnoc {

struct NetworkParams {
    MeshShape shape;
    int router_buffers = 2;
    int subchannels = 4;
    int buffers_per_subchannel = 4;
    int reversal_latency = 5;
    /// Starting split; balanced when absent.
    std::optional<Allocation> initial_allocation;
};

/// Endpoints of a channel. `a` is the west (horizontal) or north (vertical) router.
struct ChannelLink {
    int a = 0;
    int b = 0;
    bool horizontal = true;

    Port a_port() const { return horizontal ? Port::East : Port::South; }
    Port b_port() const { return horizontal ? Port::West : Port::North; }
};

/// A router output (or input) port seen as one end of a channel direction.
struct PortLink {
    int channel = -1;
    Direction outgoing = Direction::AtoB;  ///< direction of flits leaving the router through this port

    bool valid() const { return channel >= 0; }
};

class MeshNetwork;

/// Phase 1 hook: new packets for this cycle.
class InjectionSource {
public:
    virtual ~InjectionSource() = default;
    virtual void generate(std::uint64_t cycle, std::vector<Packet>& out) = 0;
};

/// Phase 6 hook: read-only sampling after all movement in the cycle.
class CycleObserver {
public:
    virtual ~CycleObserver() = default;
    virtual void on_cycle(const MeshNetwork& net) = 0;
};

/// Phase 7 hook: invoked on every epoch boundary, before channel epoch counters reset.
class EpochController {
public:
    virtual ~EpochController() = default;
    virtual int epoch_length() const = 0;
    virtual void on_epoch(MeshNetwork& net) = 0;
};

struct Ejection {
    Flit flit;
    std::uint64_t cycle = 0;
};

struct NetworkCounters {
    std::uint64_t packets_injected = 0;
    std::uint64_t flits_injected = 0;
    std::uint64_t self_delivered_packets = 0;
    std::uint64_t flits_ejected = 0;
    std::uint64_t packets_ejected = 0;
    std::uint64_t router_buffer_writes = 0;
    std::uint64_t router_buffer_reads = 0;
    std::uint64_t router_traversals = 0;
    std::uint64_t channel_traversals = 0;
    std::uint64_t falsefull_cycles = 0;  ///< summed over channels
};

/// Cycle-driven W x H mesh of routers joined by RMC channels.
///
/// Each call to step() runs the phases in a fixed order:
///   1 injection into source queues, 2 source queue -> local input buffer,
///   3 channel switching/drain/transmit, 4 router arbitration + crossbar,
///   5 credit returns, 6 falsefull detection + observers, 7 epoch boundary.
class MeshNetwork {
public:
    explicit MeshNetwork(NetworkParams params);

    const NetworkParams& params() const { return params_; }
    const MeshShape& shape() const { return params_.shape; }
    std::uint64_t cycle() const { return cycle_; }

    void set_injection_source(InjectionSource* source) { source_ = source; }
    void add_observer(CycleObserver* observer) { observers_.push_back(observer); }
    void set_controller(EpochController* controller) { controller_ = controller; }

    void step();
    void run(std::uint64_t cycles);

    /// Adds a packet to its source queue (src == dst is delivered on the spot).
    void enqueue(const Packet& packet);

    /// Reconfigures one channel; upstream credit counters follow the capacity change.
    void request_allocation(int channel, Allocation target);

    const std::vector<RouterState>& routers() const { return routers_; }
    const RouterState& router(int node) const { return routers_[static_cast<std::size_t>(node)]; }
    const std::vector<RmcChannel>& channels() const { return channels_; }
    const RmcChannel& channel(int c) const { return channels_[static_cast<std::size_t>(c)]; }
    const ChannelLink& link(int c) const { return links_[static_cast<std::size_t>(c)]; }
    int channel_count() const { return static_cast<int>(channels_.size()); }
    PortLink port_link(int node, Port p) const;
    std::string channel_key(int c) const;

    /// Credit counter and the capacity backing it, for a link output port.
    int credits(int node, Port p) const { return router(node).credits[static_cast<std::size_t>(index(p))]; }
    int capacity(int node, Port p) const;
    /// Router whose input buffer is fed by channel `c` in direction `d`, and that port.
    std::pair<int, Port> downstream(int c, Direction d) const;
    std::pair<int, Port> upstream(int c, Direction d) const;

    std::uint64_t source_queue_flits(int node) const;
    std::uint64_t source_queue_flits() const { return source_resident_; }
    std::uint64_t router_resident_flits() const;
    std::uint64_t channel_resident_flits() const;

    std::span<const Ejection> ejections() const { return ejections_; }
    /// Per-channel falsefull flag for the cycle just sampled.
    std::span<const std::uint8_t> falsefull_flags() const { return falsefull_flags_; }
    const NetworkCounters& counters() const { return counters_; }
    std::uint64_t completed_reversals() const;
    std::uint64_t stored_channel_flits() const;
    std::uint64_t last_progress_cycle() const { return last_progress_; }
    /// Flits granted through router `node`'s crossbar since construction.
    std::uint64_t router_forwarded(int node) const { return router_forwarded_[static_cast<std::size_t>(node)]; }

    /// Flit conservation and per-port credit coherence. Throws SimulationError on breach.
    void check_invariants() const;

private:
    struct SourceQueue {
        std::deque<Packet> packets;
        int next_flit = 0;
    };
    struct CreditReturn {
        int node;
        Port output;
    };

    RouterState& router_mut(int node) { return routers_[static_cast<std::size_t>(node)]; }
    void sync_credits(int c);

    void inject_phase();
    void source_phase();
    void channel_phase();
    void router_phase();
    void credit_phase();
    void sample_phase();
    void epoch_phase();

    NetworkParams params_;
    std::vector<RouterState> routers_;
    std::vector<RmcChannel> channels_;
    std::vector<ChannelLink> links_;
    std::vector<PortLink> port_links_;  ///< node * 4 + port
    std::vector<std::array<int, 2>> capacity_cache_;
    std::vector<SourceQueue> sources_;
    std::vector<int> router_load_;  ///< flits held in each router's input buffers
    std::vector<std::uint64_t> router_forwarded_;
    std::uint64_t source_resident_ = 0;

    InjectionSource* source_ = nullptr;
    std::vector<CycleObserver*> observers_;
    EpochController* controller_ = nullptr;

    std::uint64_t cycle_ = 0;
    std::uint64_t last_progress_ = 0;
    NetworkCounters counters_;
    std::vector<Packet> injection_buffer_;
    std::vector<Grant> grants_;
    std::vector<CreditReturn> credit_returns_;
    std::vector<Ejection> ejections_;
    std::vector<std::uint8_t> falsefull_flags_;
};

}  // namespace rmcnoc
