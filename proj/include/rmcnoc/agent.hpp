#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rmcnoc/dense_net.hpp"

namespace rmcnoc {

struct AgentConfig {
    double alpha = 0.001;
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.5;  ///< share of the training budget spent decaying
    int replay_capacity = 1024;
    int batch_size = 16;
    int target_sync = 100;  ///< updates between target-network copies
    bool use_replay = true;  ///< false: learn online from the latest transition only
    bool use_target = true;  ///< false: bootstrap from the online net itself
    double reward_scale = 1.0;
    bool with_bias = true;
    std::uint64_t seed = 1;
};

/// Linear decay from start to end over the first `decay_fraction` of training, then held.
double epsilon_at(const AgentConfig& cfg, double progress);

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 1024);

    void push(Experience e);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Experience& operator[](std::size_t i) const { return items_[i]; }
    /// Uniform draws with replacement.
    void sample(std::size_t n, std::mt19937_64& rng, std::vector<Experience>& out) const;

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Experience> items_;
};

/// splitmix64 finaliser.
std::uint64_t mix_seed(std::uint64_t x);
/// Stable per-agent stream seed from the run seed and the agent's key.
std::uint64_t agent_seed(std::uint64_t run_seed, const std::string& key);

class DqnAgent {
public:
    DqnAgent(std::vector<int> sizes, const AgentConfig& cfg, std::uint64_t seed);

    const DenseNet& net() const { return net_; }
    DenseNet& net() { return net_; }
    const DenseNet& target_net() const { return target_; }
    const AgentConfig& config() const { return cfg_; }
    std::uint64_t updates() const { return updates_; }
    const ReplayBuffer& replay() const { return replay_; }

    std::vector<double> q_values(std::span<const double> obs) const { return net_.forward(obs); }
    int act(std::span<const double> obs, double epsilon);
    int greedy(std::span<const double> obs) const;

    void remember(Experience e);
    /// One training update if enough experience is stored; returns the batch loss.
    std::optional<double> learn();

    /// Replaces the weights (both nets) with a loaded set.
    void load(const DenseNet& net);

private:
    AgentConfig cfg_;
    DenseNet net_;
    DenseNet target_;
    ReplayBuffer replay_;
    std::mt19937_64 rng_;
    std::uint64_t updates_ = 0;
    std::vector<Experience> batch_;
};

enum class Execution { Serial, Parallel };

/// Independent agents stepped together at epoch boundaries.
class AgentPool {
public:
    AgentPool() = default;
    AgentPool(const std::vector<std::string>& keys, std::vector<int> sizes, const AgentConfig& cfg);

    std::size_t size() const { return agents_.size(); }
    const std::vector<std::string>& keys() const { return keys_; }
    DqnAgent& agent(std::size_t i) { return agents_[i]; }
    const DqnAgent& agent(std::size_t i) const { return agents_[i]; }
    const std::vector<int>& sizes() const { return sizes_; }

    void act(std::span<const std::vector<double>> obs, double epsilon, std::vector<int>& actions,
             Execution exec = Execution::Serial);
    void greedy(std::span<const std::vector<double>> obs, std::vector<int>& actions,
                Execution exec = Execution::Serial) const;
    /// remember(i) then learn() for every agent. Transitions must have one entry per agent.
    void update(std::vector<Experience>& transitions, Execution exec = Execution::Serial);

private:
    std::vector<std::string> keys_;
    std::vector<int> sizes_;
    std::vector<DqnAgent> agents_;
};

/// Tracks mean per-agent reward per epoch and detects a plateau.
class ConvergenceTracker {
public:
    explicit ConvergenceTracker(std::size_t window = 50, double tolerance = 0.01);

    void record(double mean_reward);
    /// The last three window averages change by less than the tolerance twice in a row.
    bool converged() const;
    std::size_t epochs() const { return history_.size(); }
    const std::vector<double>& history() const { return history_; }
    std::size_t window() const { return window_; }
    double tolerance() const { return tolerance_; }
    std::optional<double> window_mean(std::size_t back) const;

private:
    std::size_t window_;
    double tolerance_;
    std::vector<double> history_;
};

}  // namespace rmcnoc
