#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rmcnoc/ring_fifo.hpp"
#include "rmcnoc/types.hpp"

namespace rmcnoc {

/// Dimension-order route: resolve x first, then y, then eject.
Port xy_route(Coord current, Coord dst);

struct Grant {
    Port input;
    Port output;
};

inline constexpr std::int8_t kNoPort = -1;

struct RouterState {
    Coord coord;
    std::array<RingFifo<Flit>, kPortCount> input;
    /// Free downstream slots per output. Goes negative only while a shrunken pool is still
    /// holding flits from a subchannel that is draining away.
    std::array<int, kPortCount> credits{};
    std::array<std::uint8_t, kPortCount> rr_pointer{};
    /// Per output: input currently holding the wormhole lock.
    std::array<std::int8_t, kPortCount> locked_input{kNoPort, kNoPort, kNoPort, kNoPort, kNoPort};
    /// Per input: output of the packet at the head of the buffer.
    std::array<std::int8_t, kPortCount> route{kNoPort, kNoPort, kNoPort, kNoPort, kNoPort};
    std::array<bool, kPortCount> has_link{};

    RouterState() = default;
    RouterState(Coord c, int buffer_depth, std::array<bool, kPortCount> links);
};

/// Output-side readiness beyond the credit counter (the channel can take a write this cycle).
using OutputReady = std::array<bool, kPortCount>;

/// One arbitration round. At most one grant per output, round-robin among contenders
/// whose route targets that output and which hold (or may take) its wormhole lock.
/// Link outputs additionally need a positive credit. Grant bookkeeping (credits, locks,
/// pointers) is applied here; moving the flit is left to the caller.
void router_cycle(RouterState& router, const MeshShape& shape, const OutputReady& ready,
                  std::vector<Grant>& grants);

/// Returns one credit to `output`. Exceeding the capacity is a simulator bug.
void credit_return(RouterState& router, Port output, int capacity);

}  // namespace rmcnoc
