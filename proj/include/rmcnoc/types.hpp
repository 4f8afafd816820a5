#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rmcnoc {

/// Thrown when a simulator invariant is breached; the run is aborted.
class SimulationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Mesh coordinate. x grows eastward, y grows southward.
struct Coord {
    int x = 0;
    int y = 0;

    friend bool operator==(const Coord&, const Coord&) = default;
};

struct MeshShape {
    int width = 8;
    int height = 8;

    int nodes() const { return width * height; }
    bool contains(Coord c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
    int node_id(Coord c) const { return c.y * width + c.x; }
    Coord coord(int node) const { return {node % width, node / width}; }
    /// Number of bidirectional links between adjacent routers.
    int channel_count() const { return (width - 1) * height + width * (height - 1); }

    friend bool operator==(const MeshShape&, const MeshShape&) = default;
};

enum class Port : std::uint8_t { North = 0, East = 1, South = 2, West = 3, Local = 4 };

inline constexpr int kPortCount = 5;
inline constexpr int kLinkPortCount = 4;
inline constexpr std::array<Port, kLinkPortCount> kLinkPorts = {Port::North, Port::East, Port::South,
                                                                 Port::West};

constexpr int index(Port p) { return static_cast<int>(p); }

constexpr Port opposite(Port p) {
    switch (p) {
    case Port::North: return Port::South;
    case Port::South: return Port::North;
    case Port::East: return Port::West;
    case Port::West: return Port::East;
    case Port::Local: return Port::Local;
    }
    return Port::Local;
}

/// Neighbor coordinate through a link port; may fall outside the mesh.
constexpr Coord step_towards(Coord c, Port p) {
    switch (p) {
    case Port::North: return {c.x, c.y - 1};
    case Port::South: return {c.x, c.y + 1};
    case Port::East: return {c.x + 1, c.y};
    case Port::West: return {c.x - 1, c.y};
    case Port::Local: return c;
    }
    return c;
}

std::string_view to_string(Port p);

enum class FlitKind : std::uint8_t { Head, Body, Tail, Single };

constexpr bool opens_packet(FlitKind k) { return k == FlitKind::Head || k == FlitKind::Single; }
constexpr bool closes_packet(FlitKind k) { return k == FlitKind::Tail || k == FlitKind::Single; }

struct Packet {
    std::uint64_t id = 0;
    Coord src;
    Coord dst;
    int length = 1;
    std::uint64_t creation_cycle = 0;
};

/// Flow-control unit. The 128-bit payload is not modeled.
struct Flit {
    std::uint64_t packet_id = 0;
    std::uint64_t creation_cycle = 0;
    std::uint64_t injection_cycle = 0;
    std::uint64_t channel_entry_cycle = 0;
    std::uint16_t src = 0;
    std::uint16_t dst = 0;
    std::uint16_t index = 0;
    FlitKind kind = FlitKind::Single;
};

/// Splits a packet into its wormhole flit sequence.
FlitKind flit_kind_for(int index, int length);

}  // namespace rmcnoc
