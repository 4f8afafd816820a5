#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmcnoc/agent.hpp"
#include "rmcnoc/config.hpp"
#include "rmcnoc/metrics.hpp"
#include "rmcnoc/weights.hpp"

namespace rmcnoc {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Full simulation of one configuration. RACE and CURE need `weights`.
MetricsRecord run_eval(const ExperimentConfig& cfg, const WeightSet* weights = nullptr);

struct EpisodeSummary {
    int episode = 0;
    std::string workload;
    double epsilon_end = 0.0;  ///< exploration rate at the last boundary of the episode
    double mean_reward = 0.0;  ///< mean per-agent epoch reward
    std::uint64_t falsefulls = 0;
};

struct TrainingReport {
    WeightSet weights;
    std::vector<EpisodeSummary> episodes;
    bool converged = false;
    int episodes_run = 0;
    std::size_t epochs = 0;
    /// Window means at the stopping point, most recent first.
    std::vector<double> final_windows;
};

using EpisodeCallback = std::function<void(const EpisodeSummary&)>;

/// Offline training of RACE (cycling the training workloads) or CURE (one workload).
/// Stops on the convergence rule once exploration has decayed, or at the episode cap.
TrainingReport run_training(const ExperimentConfig& cfg, const EpisodeCallback& on_episode = {});

struct RunRequest {
    ExperimentConfig config;
    const WeightSet* weights = nullptr;
};

/// Independent evaluations; Parallel spreads them over OpenMP threads. Results keep request order.
std::vector<MetricsRecord> run_batch(std::span<const RunRequest> requests, Execution exec = Execution::Serial);

struct SweepPlan {
    ExperimentConfig base;
    std::vector<int> subchannels{4, 6, 8};
    std::vector<PolicyKind> policies{PolicyKind::Fixed, PolicyKind::Race};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int per_port_total = 11;  ///< R + CB * S / 2 held constant across S
};

/// One configuration per (S, policy, seed), in that nesting order.
std::vector<ExperimentConfig> sweep_configs(const SweepPlan& plan);

/// The first set trained for this policy, mesh and S whose workload matches (or is shared).
const WeightSet* find_weights(std::span<const WeightSet> sets, const ExperimentConfig& cfg);

struct NormalizedRow {
    std::string policy;
    std::string workload;
    double injection_rate = 0.0;
    int packet_length = 0;
    std::string buffers;
    int mesh_width = 0;
    int mesh_height = 0;
    std::uint64_t seed = 0;
    std::optional<double> latency;  ///< divided by the matching FIXED run
    std::optional<double> energy;
    std::optional<double> falsefull_rate;
};

/// Pairs each record with the FIXED run of the same workload, load, buffers, mesh and seed.
std::vector<NormalizedRow> normalize(std::span<const MetricsRecord> records);
std::string normalized_csv(std::span<const NormalizedRow> rows);
std::string summary_text(std::span<const MetricsRecord> records);

/// Writes metrics.csv, normalized.csv and summary.txt into `dir`.
void emit_report(std::span<const MetricsRecord> records, const std::filesystem::path& dir);

/// Resolved config, build versions and the optional training report as JSON.
std::string run_metadata(const ExperimentConfig& cfg, const TrainingReport* training = nullptr);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rmcnoc
