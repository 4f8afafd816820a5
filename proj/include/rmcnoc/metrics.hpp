#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmcnoc/config.hpp"
#include "rmcnoc/network.hpp"

namespace rmcnoc {

struct EnergyCounts {
    std::uint64_t buffer_writes = 0;
    std::uint64_t buffer_reads = 0;
    std::uint64_t channel_stage_traversals = 0;
    std::uint64_t router_traversals = 0;
    std::uint64_t reversals = 0;

    EnergyCounts operator-(const EnergyCounts& o) const;
    friend bool operator==(const EnergyCounts&, const EnergyCounts&) = default;
};

struct EnergyBreakdown {
    double buffer_write = 0.0;
    double buffer_read = 0.0;
    double channel = 0.0;
    double router = 0.0;
    double reversal = 0.0;
    double total = 0.0;
    friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

/// Event counts accumulated by the network so far. Channel buffers are written and read once
/// for every flit that waits in them; each traversal passes CB channel stages.
EnergyCounts energy_counts(const MeshNetwork& net);
EnergyBreakdown compute_energy(const EnergyCounts& counts, const EnergyModel& model);

/// Distinct values among a router's adjacent channel configurations.
int count_distinct(std::span<const int> configs);
/// Subchannels pointing toward `node` on each of its channels (configured split).
std::vector<int> adjacent_configs(const MeshNetwork& net, int node);
/// Routers with a link on every side.
bool is_interior(const MeshNetwork& net, int node);

/// Fractions of router-windows with 1, 2 and 3+ distinct adjacent configurations.
class ConfigHistogram {
public:
    void add(int distinct);
    std::array<double, 3> fractions() const;
    std::uint64_t samples() const { return counts_[0] + counts_[1] + counts_[2]; }
    const std::array<std::uint64_t, 3>& counts() const { return counts_; }

private:
    std::array<std::uint64_t, 3> counts_{};
};

struct MetricsRecord {
    std::string policy;
    std::string workload;
    double injection_rate = 0.0;
    int packet_length = 0;
    std::string buffers;  ///< 4S_4CB_2RB style key
    int mesh_width = 0;
    int mesh_height = 0;
    std::uint64_t seed = 0;
    std::uint64_t cycles = 0;
    std::uint64_t warmup = 0;
    std::uint64_t packets = 0;  ///< measured packets
    std::optional<double> avg_packet_latency;
    std::optional<double> avg_flit_latency;
    double throughput = 0.0;  ///< ejected flits / node / cycle
    double falsefull_rate = 0.0;
    std::array<double, 3> hist_all{};
    std::array<double, 3> hist_interior{};
    EnergyBreakdown energy;
    std::uint64_t reversals = 0;
    std::optional<double> reward_mean;
    std::optional<double> reward_std;
    std::uint64_t offered_flits = 0;
    std::uint64_t ejected_flits = 0;

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// Per-cycle sampling of everything a MetricsRecord needs, excluding warmup.
class MetricsCollector : public CycleObserver {
public:
    explicit MetricsCollector(std::uint64_t warmup, int window = 50);

    void on_cycle(const MeshNetwork& net) override;

    std::uint64_t packets() const { return packets_; }
    std::optional<double> avg_packet_latency() const;
    std::optional<double> avg_flit_latency() const;
    std::uint64_t falsefulls() const { return falsefulls_; }
    std::uint64_t measured_cycles() const { return measured_cycles_; }
    std::uint64_t ejected_flits() const { return ejected_flits_; }
    const ConfigHistogram& histogram_all() const { return hist_all_; }
    const ConfigHistogram& histogram_interior() const { return hist_interior_; }
    /// Energy events since warmup ended.
    EnergyCounts energy_since_warmup(const MeshNetwork& net) const;
    std::uint64_t reversals_since_warmup(const MeshNetwork& net) const;

private:
    std::uint64_t warmup_;
    int window_;
    std::uint64_t packets_ = 0;
    double packet_latency_sum_ = 0.0;
    std::uint64_t flits_ = 0;
    double flit_latency_sum_ = 0.0;
    std::uint64_t falsefulls_ = 0;
    std::uint64_t measured_cycles_ = 0;
    std::uint64_t ejected_flits_ = 0;
    EnergyCounts at_warmup_;
    ConfigHistogram hist_all_, hist_interior_;
};

/// Stable column order; optional fields are written empty.
std::vector<std::string> csv_header();
std::string to_csv_row(const MetricsRecord& r);
std::string to_csv(std::span<const MetricsRecord> records);
std::vector<MetricsRecord> parse_csv(const std::string& text);

}  // namespace rmcnoc
