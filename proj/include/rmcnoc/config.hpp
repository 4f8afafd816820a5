#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmcnoc/agent.hpp"
#include "rmcnoc/network.hpp"
#include "rmcnoc/policy.hpp"
#include "rmcnoc/workload.hpp"

namespace rmcnoc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-event energies in picojoules. The defaults are placeholders: only ratios between
/// runs with the same constants are meaningful.
struct EnergyModel {
    double buffer_write = 1.0;
    double buffer_read = 1.0;
    double channel_stage_traverse = 0.25;
    double router_traverse = 1.5;
    double reversal_event = 2.0;
};

struct TrainingConfig {
    /// Workload presets cycled through episode by episode. Empty: w1-w5 for RACE, the
    /// evaluation workload for CURE.
    std::vector<std::string> workloads;
    int episodes = 200;  ///< budget cap
    std::uint64_t episode_cycles = 50'000;
    std::size_t convergence_window = 50;
    double convergence_tolerance = 0.01;
};

/// Buffer organisation of one port: S subchannels of CB buffers plus R router buffers.
struct BufferConfig {
    int subchannels = 4;
    int buffers_per_subchannel = 4;
    int router_buffers = 2;

    /// "4S_4CB_3RB" style key.
    std::string key() const;
    /// R + CB * S / 2: the buffers behind one port under a balanced split.
    int per_port_total() const { return router_buffers + buffers_per_subchannel * (subchannels / 2); }
    friend bool operator==(const BufferConfig&, const BufferConfig&) = default;
};

BufferConfig parse_buffer_key(const std::string& key);
/// Largest CB that leaves at least two router buffers, remaining buffers go to the router.
BufferConfig buffers_for_total(int subchannels, int per_port_total);

struct ExperimentConfig {
    int mesh_width = 8;
    int mesh_height = 8;
    int router_buffers = 2;
    int subchannels = 4;
    int buffers_per_subchannel = 4;
    int reversal_latency = 5;
    PolicyKind policy = PolicyKind::Fixed;
    int race_epoch = 50;
    int qore_epoch = 50;
    int cure_epoch = 1000;
    double qore_threshold = 0.05;
    double reward_epsilon = 1.0;  ///< weight of the unequal-split penalty
    CreditScale race_credit_scale = CreditScale::Capacity;
    std::uint64_t total_cycles = 1'000'000;
    std::uint64_t warmup_cycles = 100'000;
    WorkloadSpec workload;
    AgentConfig agent;
    TrainingConfig training;
    EnergyModel energy;
    std::uint64_t seed = 1;
    bool parallel_agents = false;  ///< OpenMP across agents at epoch boundaries

    ExperimentConfig();

    MeshShape shape() const { return {mesh_width, mesh_height}; }
    BufferConfig buffers() const { return {subchannels, buffers_per_subchannel, router_buffers}; }
    void set_buffers(const BufferConfig& b);
    /// Network parameters before any policy-specific change (ORACLE adds subchannels).
    NetworkParams network_params() const;
    /// Name used to pair runs: the preset name or the pattern kind.
    std::string workload_label() const;
    int policy_epoch() const;
    void validate() const;
};

/// Fills preset phases and the generator seed for a run.
WorkloadSpec resolve_workload(const WorkloadSpec& spec, const MeshShape& shape, std::uint64_t run_seed);

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace rmcnoc
