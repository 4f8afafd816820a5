#include "rmcnoc/policy.hpp"

#include <algorithm>
#include <stdexcept>

namespace rmcnoc {

std::string to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Fixed:
            return "fixed";
        case PolicyKind::Oracle:
            return "oracle";
        case PolicyKind::Qore:
            return "qore";
        case PolicyKind::Cure:
            return "cure";
        case PolicyKind::Race:
            return "race";
    }
    return "?";
}

PolicyKind parse_policy_kind(const std::string& name) {
    for (PolicyKind k : {PolicyKind::Fixed, PolicyKind::Oracle, PolicyKind::Qore, PolicyKind::Cure, PolicyKind::Race})
        if (name == to_string(k)) return k;
    throw std::invalid_argument("unknown policy '" + name + "' (expected fixed, oracle, qore, cure or race)");
}

std::string to_string(CreditScale s) { return s == CreditScale::Capacity ? "capacity" : "max_capacity"; }

CreditScale parse_credit_scale(const std::string& name) {
    if (name == "capacity") return CreditScale::Capacity;
    if (name == "max_capacity") return CreditScale::MaxCapacity;
    throw std::invalid_argument("unknown credit scale '" + name + "' (expected capacity or max_capacity)");
}

bool is_learned(PolicyKind k) { return k == PolicyKind::Cure || k == PolicyKind::Race; }

int action_count(int subchannels) {
    if (subchannels < 2) throw std::invalid_argument("at least two subchannels are required");
    return subchannels - 1;
}

Allocation action_allocation(int action, int subchannels) {
    if (action < 0 || action >= action_count(subchannels))
        throw std::invalid_argument("action " + std::to_string(action) + " out of range for S=" +
                                    std::to_string(subchannels));
    return {action + 1, subchannels - 1 - action};
}

int action_index(Allocation a, int subchannels) {
    if (a.a_to_b < 1 || a.b_to_a < 1 || a.a_to_b + a.b_to_a != subchannels)
        throw std::invalid_argument("allocation is not in the action list");
    return a.a_to_b - 1;
}

int balanced_action(int subchannels) { return subchannels / 2 - 1; }

Allocation fixed_decide(int subchannels) { return action_allocation(balanced_action(subchannels), subchannels); }

NetworkParams oracle_configure(NetworkParams params) {
    params.subchannels += 2;
    const int s = params.subchannels;
    params.initial_allocation = Allocation{(s + 1) / 2, s - (s + 1) / 2};
    return params;
}

Allocation qore_decide(std::array<std::uint64_t, 2> traversals, Allocation current, int subchannels,
                       double threshold) {
    const double ab = static_cast<double>(traversals[0]);
    const double ba = static_cast<double>(traversals[1]);
    const double total = ab + ba;
    if (total == 0.0) return current;
    const double diff = (ab - ba) / total;
    const int balanced = subchannels / 2;
    int k = current.a_to_b;
    if (diff > threshold)
        k = std::min(subchannels - 1, k + 1);
    else if (diff < -threshold)
        k = std::max(1, k - 1);
    else if (k > balanced)
        --k;
    else if (k < balanced)
        ++k;
    return {k, subchannels - k};
}

// ---------------------------------------------------------------- RACE

namespace {

constexpr std::array<Port, 4> kObservedPorts{Port::North, Port::East, Port::South, Port::West};

double credit_fraction(const MeshNetwork& net, int node, Port p, CreditScale scale = CreditScale::Capacity) {
    if (!net.port_link(node, p).valid()) return 1.0;
    const NetworkParams& np = net.params();
    const int cap = scale == CreditScale::Capacity
                        ? net.capacity(node, p)
                        : np.router_buffers + np.buffers_per_subchannel * (np.subchannels - 1);
    if (cap <= 0) return 1.0;
    return std::clamp(static_cast<double>(net.credits(node, p)) / cap, 0.0, 1.0);
}

}  // namespace

std::vector<double> race_observe(const MeshNetwork& net, int channel, CreditScale scale) {
    const ChannelLink& l = net.link(channel);
    std::vector<double> s;
    s.reserve(kRaceInputs);
    for (int node : {l.a, l.b})
        for (Port p : kObservedPorts) s.push_back(credit_fraction(net, node, p, scale));
    return s;
}

double race_reward(const EpochStats& stats, int subchannels, double epsilon_weight) {
    const double unequal = stats.action != balanced_action(subchannels) ? 1.0 : 0.0;
    return -epsilon_weight * unequal - static_cast<double>(stats.falsefull_count);
}

// ---------------------------------------------------------------- CURE

std::vector<double> cure_observe(const MeshNetwork& net, int node, const CureContext& ctx) {
    const RouterState& r = net.router(node);
    const NetworkParams& p = net.params();
    const double pool = static_cast<double>(p.subchannels * p.buffers_per_subchannel);
    std::vector<double> s;
    s.reserve(kCureInputs);
    for (int i = 0; i < kPortCount; ++i)
        s.push_back(static_cast<double>(r.input[static_cast<std::size_t>(i)].size()) / p.router_buffers);
    for (Port port : kObservedPorts) s.push_back(credit_fraction(net, node, port));
    for (bool toward : {true, false}) {
        for (Port port : kObservedPorts) {
            const PortLink pl = net.port_link(node, port);
            if (!pl.valid()) {
                s.push_back(0.0);
                continue;
            }
            const Direction d = toward ? opposite(pl.outgoing) : pl.outgoing;
            s.push_back(std::min(1.0, net.channel(pl.channel).occupancy(d) / pool));
        }
    }
    s.push_back(std::min(1.0, static_cast<double>(net.source_queue_flits(node)) / ctx.queue_scale));
    const double max_forward = static_cast<double>(ctx.epoch_length) * kPortCount;
    s.push_back(std::min(1.0, static_cast<double>(ctx.forwarded_last_epoch) / max_forward));
    return s;
}

RouterFrameConfig cure_action_config(int action, int subchannels) {
    const Allocation a = action_allocation(action, subchannels);
    return {a.a_to_b, a.b_to_a};
}

Allocation router_frame_to_channel(RouterFrameConfig cfg, const ChannelLink& link, int node) {
    if (node == link.b) return {cfg.toward, cfg.away};
    if (node == link.a) return {cfg.away, cfg.toward};
    throw std::invalid_argument("router is not an endpoint of the channel");
}

Allocation resolve_conflict(RouterFrameConfig /*from_a*/, RouterFrameConfig from_b, const ChannelLink& link) {
    return router_frame_to_channel(from_b, link, link.b);
}

// ---------------------------------------------------------------- controllers

void QorePolicy::on_epoch(MeshNetwork& net) {
    const int s = net.params().subchannels;
    for (int c = 0; c < net.channel_count(); ++c) {
        const RmcChannel& ch = net.channel(c);
        const Allocation current = ch.allocation();
        const Allocation next = qore_decide(ch.traversals(), current, s, threshold_);
        if (next != current) net.request_allocation(c, next);
    }
}

RacePolicy::RacePolicy(AgentPool& pool, int epoch, double epsilon_weight, Execution exec)
    : pool_(pool), epoch_(epoch), epsilon_weight_(epsilon_weight), exec_(exec) {}

std::vector<std::string> RacePolicy::agent_keys(const MeshNetwork& net) {
    std::vector<std::string> keys;
    for (int c = 0; c < net.channel_count(); ++c) keys.push_back(net.channel_key(c));
    return keys;
}

void RacePolicy::on_epoch(MeshNetwork& net) {
    const auto n = static_cast<std::size_t>(net.channel_count());
    if (pool_.size() != n) throw std::invalid_argument("RACE needs one agent per channel");
    const int s = net.params().subchannels;

    obs_.resize(n);
    for (std::size_t c = 0; c < n; ++c) obs_[c] = race_observe(net, static_cast<int>(c), scale_);

    if (have_pending_) {
        transitions_.resize(n);
        double sum = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const RmcChannel& ch = net.channel(static_cast<int>(c));
            const EpochStats stats{ch.falsefull_epoch_count(), ch.traversals(), prev_actions_[c]};
            const double r = race_reward(stats, s, epsilon_weight_);
            sum += r;
            transitions_[c] = Experience{prev_obs_[c], prev_actions_[c], r, obs_[c]};
        }
        rewards_.epoch_mean.push_back(sum / static_cast<double>(n));
        if (training_) pool_.update(transitions_, exec_);
    }

    if (training_)
        pool_.act(obs_, epsilon_, actions_, exec_);
    else
        pool_.greedy(obs_, actions_, exec_);

    for (std::size_t c = 0; c < n; ++c) {
        const Allocation next = action_allocation(actions_[c], s);
        if (next != net.channel(static_cast<int>(c)).allocation()) net.request_allocation(static_cast<int>(c), next);
    }
    prev_obs_.swap(obs_);
    prev_actions_ = actions_;
    have_pending_ = true;
    ++epochs_;
}

CurePolicy::CurePolicy(AgentPool& pool, int epoch, double epsilon_weight, Execution exec)
    : pool_(pool), epoch_(epoch), epsilon_weight_(epsilon_weight), exec_(exec) {}

std::vector<std::string> CurePolicy::agent_keys(const MeshNetwork& net) {
    std::vector<std::string> keys;
    for (int node = 0; node < net.shape().nodes(); ++node) keys.push_back("r" + std::to_string(node));
    return keys;
}

void CurePolicy::reset_episode() {
    have_pending_ = false;
    forwarded_at_boundary_.clear();
}

void CurePolicy::on_epoch(MeshNetwork& net) {
    const auto n = static_cast<std::size_t>(net.shape().nodes());
    if (pool_.size() != n) throw std::invalid_argument("CURE needs one agent per router");
    const int s = net.params().subchannels;
    if (forwarded_at_boundary_.size() != n) forwarded_at_boundary_.assign(n, 0);

    obs_.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        const int node = static_cast<int>(r);
        CureContext ctx;
        ctx.epoch_length = epoch_;
        ctx.forwarded_last_epoch = net.router_forwarded(node) - forwarded_at_boundary_[r];
        forwarded_at_boundary_[r] = net.router_forwarded(node);
        obs_[r] = cure_observe(net, node, ctx);
    }

    if (have_pending_) {
        transitions_.resize(n);
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            int falsefulls = 0;
            for (Port p : kObservedPorts) {
                const PortLink pl = net.port_link(static_cast<int>(r), p);
                if (pl.valid()) falsefulls += net.channel(pl.channel).falsefull_epoch_count();
            }
            const EpochStats stats{falsefulls, {}, prev_actions_[r]};
            const double reward = race_reward(stats, s, epsilon_weight_);
            sum += reward;
            transitions_[r] = Experience{prev_obs_[r], prev_actions_[r], reward, obs_[r]};
        }
        rewards_.epoch_mean.push_back(sum / static_cast<double>(n));
        if (training_) pool_.update(transitions_, exec_);
    }

    if (training_)
        pool_.act(obs_, epsilon_, actions_, exec_);
    else
        pool_.greedy(obs_, actions_, exec_);

    for (int c = 0; c < net.channel_count(); ++c) {
        const ChannelLink& l = net.link(c);
        const Allocation next = resolve_conflict(cure_action_config(actions_[static_cast<std::size_t>(l.a)], s),
                                                 cure_action_config(actions_[static_cast<std::size_t>(l.b)], s), l);
        if (next != net.channel(c).allocation()) net.request_allocation(c, next);
    }
    prev_obs_.swap(obs_);
    prev_actions_ = actions_;
    have_pending_ = true;
    ++epochs_;
}

}  // namespace rmcnoc
