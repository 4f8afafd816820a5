#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rmcnoc/agent.hpp"
#include "rmcnoc/channel.hpp"
#include "rmcnoc/network.hpp"

namespace rmcnoc {

enum class PolicyKind { Fixed, Oracle, Qore, Cure, Race };

std::string to_string(PolicyKind k);
PolicyKind parse_policy_kind(const std::string& name);
bool is_learned(PolicyKind k);

// ---------------------------------------------------------------- action space

/// Actions are ordered [(1,S-1), (2,S-2), ..., (S-1,1)] in the channel's (AtoB, BtoA) frame.
int action_count(int subchannels);
Allocation action_allocation(int action, int subchannels);
int action_index(Allocation a, int subchannels);
int balanced_action(int subchannels);

Allocation fixed_decide(int subchannels);
/// Two extra subchannels, split evenly and never changed.
NetworkParams oracle_configure(NetworkParams params);

/// Shifts one subchannel toward the heavier direction when the traversal difference
/// exceeds `threshold` of the total, otherwise one step back toward balance.
Allocation qore_decide(std::array<std::uint64_t, 2> traversals, Allocation current, int subchannels,
                       double threshold = 0.05);

// ---------------------------------------------------------------- RACE

inline constexpr int kRaceInputs = 8;

/// Divisor that turns a credit counter into a feature. `Capacity` uses the port's current
/// capacity; `MaxCapacity` uses the largest capacity any split can give a port, so the
/// feature stays proportional to the raw count and still reveals the current split.
enum class CreditScale { Capacity, MaxCapacity };

std::string to_string(CreditScale s);
CreditScale parse_credit_scale(const std::string& name);

/// [C_AN, C_AE, C_AS, C_AW, C_BN, C_BE, C_BS, C_BW] as credits / divisor, clamped to [0, 1];
/// ports without a link read 1.0.
std::vector<double> race_observe(const MeshNetwork& net, int channel, CreditScale scale = CreditScale::Capacity);

struct EpochStats {
    int falsefull_count = 0;
    std::array<std::uint64_t, 2> traversals{};
    int action = 0;
};

/// -epsilon_weight * [action is not balanced] - falsefull_count.
double race_reward(const EpochStats& stats, int subchannels, double epsilon_weight = 1.0);

// ---------------------------------------------------------------- CURE

inline constexpr int kCureInputs = 19;

/// Per-router snapshot inputs that need history from the previous boundary.
struct CureContext {
    std::uint64_t forwarded_last_epoch = 0;
    int epoch_length = 1000;
    double queue_scale = 64.0;  ///< source-queue flits mapped to 1.0
};

/// Input buffers x5, output credits x4, channel occupancy toward the router x4,
/// away from it x4, source queue, flits forwarded last epoch. Each in [0, 1].
std::vector<double> cure_observe(const MeshNetwork& net, int node, const CureContext& ctx);

/// A per-router choice: subchannels pointing toward the deciding router and away from it.
struct RouterFrameConfig {
    int toward = 0;
    int away = 0;
    friend bool operator==(const RouterFrameConfig&, const RouterFrameConfig&) = default;
};

RouterFrameConfig cure_action_config(int action, int subchannels);
/// Channel-frame allocation that gives `node` the split `cfg`.
Allocation router_frame_to_channel(RouterFrameConfig cfg, const ChannelLink& link, int node);
/// The east (horizontal) or south (vertical) router's choice wins; both are endpoints A and B.
Allocation resolve_conflict(RouterFrameConfig from_a, RouterFrameConfig from_b, const ChannelLink& link);

// ---------------------------------------------------------------- controllers

/// Shared bookkeeping of learned controllers.
struct RewardLog {
    std::vector<double> epoch_mean;  ///< mean per-agent reward for each completed epoch
    void clear() { epoch_mean.clear(); }
};

class QorePolicy : public EpochController {
public:
    explicit QorePolicy(int epoch = 50, double threshold = 0.05) : epoch_(epoch), threshold_(threshold) {}
    int epoch_length() const override { return epoch_; }
    void on_epoch(MeshNetwork& net) override;

private:
    int epoch_;
    double threshold_;
};

/// Per-channel deep Q agents observing the credit state of both endpoint routers.
class RacePolicy : public EpochController {
public:
    RacePolicy(AgentPool& pool, int epoch = 50, double epsilon_weight = 1.0, Execution exec = Execution::Serial);

    int epoch_length() const override { return epoch_; }
    void on_epoch(MeshNetwork& net) override;

    /// Switches between learning with exploration and pure greedy evaluation.
    void set_training(bool training) { training_ = training; }
    void set_epsilon(double eps) { epsilon_ = eps; }
    void set_credit_scale(CreditScale scale) { scale_ = scale; }
    /// Starts a fresh episode: the next boundary has no pending transition.
    void reset_episode() { have_pending_ = false; }

    const RewardLog& rewards() const { return rewards_; }
    RewardLog& rewards() { return rewards_; }
    std::uint64_t epochs_seen() const { return epochs_; }

    static std::vector<std::string> agent_keys(const MeshNetwork& net);
    static std::vector<int> layer_sizes(int subchannels) { return {kRaceInputs, 5, action_count(subchannels)}; }

private:
    AgentPool& pool_;
    int epoch_;
    double epsilon_weight_;
    Execution exec_;
    bool training_ = false;
    double epsilon_ = 0.0;
    CreditScale scale_ = CreditScale::Capacity;
    bool have_pending_ = false;
    std::uint64_t epochs_ = 0;
    std::vector<std::vector<double>> obs_, prev_obs_;
    std::vector<int> actions_, prev_actions_;
    std::vector<Experience> transitions_;
    RewardLog rewards_;
};

/// Per-router deep Q agents; each router applies one split to every adjacent channel.
class CurePolicy : public EpochController {
public:
    CurePolicy(AgentPool& pool, int epoch = 1000, double epsilon_weight = 1.0, Execution exec = Execution::Serial);

    int epoch_length() const override { return epoch_; }
    void on_epoch(MeshNetwork& net) override;

    void set_training(bool training) { training_ = training; }
    void set_epsilon(double eps) { epsilon_ = eps; }
    void reset_episode();

    const RewardLog& rewards() const { return rewards_; }
    RewardLog& rewards() { return rewards_; }
    std::uint64_t epochs_seen() const { return epochs_; }

    static std::vector<std::string> agent_keys(const MeshNetwork& net);
    static std::vector<int> layer_sizes(int subchannels) { return {kCureInputs, 30, action_count(subchannels)}; }

private:
    AgentPool& pool_;
    int epoch_;
    double epsilon_weight_;
    Execution exec_;
    bool training_ = false;
    double epsilon_ = 0.0;
    bool have_pending_ = false;
    std::uint64_t epochs_ = 0;
    std::vector<std::uint64_t> forwarded_at_boundary_;
    std::vector<std::vector<double>> obs_, prev_obs_;
    std::vector<int> actions_, prev_actions_;
    std::vector<Experience> transitions_;
    RewardLog rewards_;
};

}  // namespace rmcnoc
