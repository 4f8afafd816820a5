#include "rmcnoc/router.hpp"

#include <string>

namespace rmcnoc {

Port xy_route(Coord current, Coord dst) {
    if (dst.x > current.x) return Port::East;
    if (dst.x < current.x) return Port::West;
    if (dst.y > current.y) return Port::South;
    if (dst.y < current.y) return Port::North;
    return Port::Local;
}

RouterState::RouterState(Coord c, int buffer_depth, std::array<bool, kPortCount> links)
    : coord(c), has_link(links) {
    for (auto& buf : input) buf = RingFifo<Flit>(static_cast<std::size_t>(buffer_depth));
}

void router_cycle(RouterState& router, const MeshShape& shape, const OutputReady& ready,
                  std::vector<Grant>& grants) {
    grants.clear();
    std::array<std::int8_t, kPortCount> wants{kNoPort, kNoPort, kNoPort, kNoPort, kNoPort};
    unsigned wanted_outputs = 0;
    for (int i = 0; i < kPortCount; ++i) {
        const auto& buf = router.input[static_cast<std::size_t>(i)];
        if (buf.empty()) continue;
        auto& route = router.route[static_cast<std::size_t>(i)];
        if (route == kNoPort)
            route = static_cast<std::int8_t>(index(xy_route(router.coord, shape.coord(buf.front().dst))));
        wants[static_cast<std::size_t>(i)] = route;
        wanted_outputs |= 1u << route;
    }

    for (int o = 0; o < kPortCount; ++o) {
        if ((wanted_outputs & (1u << o)) == 0) continue;
        const auto out = static_cast<std::size_t>(o);
        if (o != index(Port::Local) && (router.credits[out] <= 0 || !ready[out])) continue;

        int winner = -1;
        const std::int8_t lock = router.locked_input[out];
        if (lock != kNoPort) {
            if (wants[static_cast<std::size_t>(lock)] == o) winner = lock;
        } else {
            int i = router.rr_pointer[out];
            for (int k = 0; k < kPortCount; ++k, i = (i + 1 == kPortCount ? 0 : i + 1)) {
                if (wants[static_cast<std::size_t>(i)] != o) continue;
                if (!opens_packet(router.input[static_cast<std::size_t>(i)].front().kind)) continue;
                winner = i;
                break;
            }
        }
        if (winner < 0) continue;

        const FlitKind kind = router.input[static_cast<std::size_t>(winner)].front().kind;
        if (o != index(Port::Local)) --router.credits[out];
        router.rr_pointer[out] = static_cast<std::uint8_t>(winner + 1 == kPortCount ? 0 : winner + 1);
        if (closes_packet(kind)) {
            router.locked_input[out] = kNoPort;
            router.route[static_cast<std::size_t>(winner)] = kNoPort;
        } else {
            router.locked_input[out] = static_cast<std::int8_t>(winner);
        }
        grants.push_back({static_cast<Port>(winner), static_cast<Port>(o)});
    }
}

void credit_return(RouterState& router, Port output, int capacity) {
    int& c = router.credits[static_cast<std::size_t>(index(output))];
    if (c >= capacity)
        throw SimulationError("credit overflow at router (" + std::to_string(router.coord.x) + "," +
                              std::to_string(router.coord.y) + ") port " + std::string(to_string(output)));
    ++c;
}

}  // namespace rmcnoc
