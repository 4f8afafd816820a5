#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmcnoc/network.hpp"
#include "rmcnoc/types.hpp"

namespace rmcnoc {

enum class WorkloadKind { UniformRandom, Transpose, Hotspot, MultiApp, Trace };

std::string to_string(WorkloadKind k);
WorkloadKind parse_workload_kind(const std::string& s);

/// Half-open node rectangle [x0, x1) x [y0, y1).
struct Region {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    bool contains(Coord c) const { return c.x >= x0 && c.x < x1 && c.y >= y0 && c.y < y1; }
    int size() const { return (x1 - x0) * (y1 - y0); }
};

/// Traffic behaviour of one region during one phase.
struct RegionProfile {
    Region region;
    double injection_rate = 0.0;  ///< mean offered flits/node/cycle
    double locality = 0.0;        ///< P(destination inside the region)
    double memory_fraction = 0.0; ///< P(destination is the region's memory controller)
    int burst_period = 0;         ///< 0 disables bursts
    double duty = 1.0;            ///< on-fraction of each burst period
    int memory_node = -1;
    double partner_fraction = 0.0; ///< P(destination inside `partner`)
    Region partner{};
};

struct PhaseSpec {
    std::uint64_t duration = 1;
    std::vector<RegionProfile> regions;
};

struct HotspotSpec {
    std::vector<int> nodes;
    double weight = 0.0;  ///< P(destination is drawn from the hotspot set)
};

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::UniformRandom;
    double injection_rate = 0.1;  ///< flits/node/cycle
    int packet_length = 4;
    HotspotSpec hotspot;
    std::vector<PhaseSpec> phases;
    std::string trace_path;
    std::string preset;  ///< informational: name of the preset this spec came from
    std::uint64_t seed = 1;
};

/// Throws std::invalid_argument when the spec is inconsistent with the mesh.
void validate(const WorkloadSpec& spec, const MeshShape& shape);

struct TraceRecord {
    std::uint64_t cycle = 0;
    int src = 0;
    int dst = 0;
    int length = 1;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

class TraceError : public std::runtime_error {
public:
    TraceError(std::size_t line, const std::string& what)
        : std::runtime_error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Streaming reader for "cycle src dst length" lines; '#' starts a comment.
class TraceReader {
public:
    TraceReader(std::istream& in, int node_count);
    /// Next validated record, or nullopt at end of stream.
    std::optional<TraceRecord> next();

private:
    std::istream& in_;
    int nodes_;
    std::size_t line_ = 0;
    std::uint64_t last_cycle_ = 0;
};

std::vector<TraceRecord> parse_trace(const std::string& path, int node_count);

/// Per-cycle packet generator implementing every workload kind.
class TrafficGenerator : public InjectionSource {
public:
    TrafficGenerator(WorkloadSpec spec, MeshShape shape);

    void generate(std::uint64_t cycle, std::vector<Packet>& out) override;

    std::uint64_t offered_packets() const { return offered_packets_; }
    std::uint64_t offered_flits() const { return offered_flits_; }
    const WorkloadSpec& spec() const { return spec_; }
    /// Phase in force at `cycle` (multi_app only).
    std::size_t phase_index(std::uint64_t cycle) const;

private:
    void emit(std::uint64_t cycle, int src, int dst, int length, std::vector<Packet>& out);
    int uniform_other(int src);
    int pick_in_region(const Region& r, int src);
    int pick_outside_region(const Region& r, int src);
    void generate_multi_app(std::uint64_t cycle, std::vector<Packet>& out);
    void generate_trace(std::uint64_t cycle, std::vector<Packet>& out);
    double uniform01();

    WorkloadSpec spec_;
    MeshShape shape_;
    std::mt19937_64 rng_;
    std::uint64_t next_packet_id_ = 0;
    std::uint64_t offered_packets_ = 0;
    std::uint64_t offered_flits_ = 0;
    std::uint64_t schedule_length_ = 0;
    std::vector<std::vector<int>> node_profile_;  ///< [phase][node] -> region profile index
    std::unique_ptr<std::ifstream> trace_file_;
    std::unique_ptr<TraceReader> trace_;
    std::optional<TraceRecord> pending_;
};

/// Named multi-application presets w1..w8 standing in for multi-program benchmark mixes.
/// `mean_rate` is the space/time averaged offered load the preset is scaled to.
WorkloadSpec make_preset(const std::string& name, const MeshShape& shape, double mean_rate, std::uint64_t seed);
std::vector<std::string> preset_names();
/// Presets used to train RL policies; the rest are held out.
std::vector<std::string> training_presets();
std::vector<std::string> heldout_presets();

}  // namespace rmcnoc
