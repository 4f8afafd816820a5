#include "rmcnoc/agent.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

namespace rmcnoc {

double epsilon_at(const AgentConfig& cfg, double progress) {
    if (cfg.epsilon_decay_fraction <= 0.0) return cfg.epsilon_end;
    const double t = std::clamp(progress / cfg.epsilon_decay_fraction, 0.0, 1.0);
    if (t >= 1.0) return cfg.epsilon_end;
    return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * t;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity_, 4096));
}

void ReplayBuffer::push(Experience e) {
    if (items_.size() < capacity_) {
        items_.push_back(std::move(e));
        return;
    }
    items_[next_] = std::move(e);
    next_ = (next_ + 1) % capacity_;
}

void ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng, std::vector<Experience>& out) const {
    out.clear();
    if (items_.empty()) return;
    for (std::size_t k = 0; k < n; ++k) out.push_back(items_[rng() % items_.size()]);
}

std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t agent_seed(std::uint64_t run_seed, const std::string& key) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : key) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return mix_seed(run_seed ^ h);
}

DqnAgent::DqnAgent(std::vector<int> sizes, const AgentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      net_(std::move(sizes), cfg.with_bias),
      replay_(static_cast<std::size_t>(std::max(1, cfg.replay_capacity))),
      rng_(seed) {
    if (cfg_.alpha <= 0.0) throw std::invalid_argument("learning rate must be positive");
    if (cfg_.gamma < 0.0 || cfg_.gamma > 1.0) throw std::invalid_argument("discount must lie in [0, 1]");
    if (cfg_.batch_size < 1 || cfg_.target_sync < 1) throw std::invalid_argument("batch size and sync period must be positive");
    net_.init_glorot(rng_);
    target_ = net_;
}

int DqnAgent::act(std::span<const double> obs, double epsilon) {
    const std::vector<double> q = net_.forward(obs);
    return select_action(q, epsilon, rng_);
}

int DqnAgent::greedy(std::span<const double> obs) const { return argmax(net_.forward(obs)); }

void DqnAgent::remember(Experience e) {
    e.r *= cfg_.reward_scale;
    if (cfg_.use_replay) {
        replay_.push(std::move(e));
    } else {
        batch_.assign(1, std::move(e));
    }
}

std::optional<double> DqnAgent::learn() {
    if (cfg_.use_replay) {
        if (replay_.size() < static_cast<std::size_t>(cfg_.batch_size)) return std::nullopt;
        replay_.sample(static_cast<std::size_t>(cfg_.batch_size), rng_, batch_);
    } else if (batch_.empty()) {
        return std::nullopt;
    }
    const DenseNet& bootstrap = cfg_.use_target ? target_ : net_;
    const double loss = train_step(net_, bootstrap, batch_, cfg_.alpha, cfg_.gamma);
    ++updates_;
    if (cfg_.use_target && updates_ % static_cast<std::uint64_t>(cfg_.target_sync) == 0) target_ = net_;
    if (!cfg_.use_replay) batch_.clear();
    return loss;
}

void DqnAgent::load(const DenseNet& net) {
    if (net.sizes() != net_.sizes()) throw std::invalid_argument("loaded net shape does not match the agent");
    net_ = net;
    target_ = net;
}

AgentPool::AgentPool(const std::vector<std::string>& keys, std::vector<int> sizes, const AgentConfig& cfg)
    : keys_(keys), sizes_(std::move(sizes)) {
    agents_.reserve(keys_.size());
    for (const std::string& key : keys_) agents_.emplace_back(sizes_, cfg, agent_seed(cfg.seed, key));
}

void AgentPool::act(std::span<const std::vector<double>> obs, double epsilon, std::vector<int>& actions,
                    Execution exec) {
    const auto n = static_cast<std::ptrdiff_t>(agents_.size());
    actions.resize(agents_.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            actions[static_cast<std::size_t>(i)] =
                agents_[static_cast<std::size_t>(i)].act(obs[static_cast<std::size_t>(i)], epsilon);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            actions[static_cast<std::size_t>(i)] =
                agents_[static_cast<std::size_t>(i)].act(obs[static_cast<std::size_t>(i)], epsilon);
    }
}

void AgentPool::greedy(std::span<const std::vector<double>> obs, std::vector<int>& actions, Execution exec) const {
    const auto n = static_cast<std::ptrdiff_t>(agents_.size());
    actions.resize(agents_.size());
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            actions[static_cast<std::size_t>(i)] =
                agents_[static_cast<std::size_t>(i)].greedy(obs[static_cast<std::size_t>(i)]);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            actions[static_cast<std::size_t>(i)] =
                agents_[static_cast<std::size_t>(i)].greedy(obs[static_cast<std::size_t>(i)]);
    }
}

void AgentPool::update(std::vector<Experience>& transitions, Execution exec) {
    if (transitions.size() != agents_.size()) throw std::invalid_argument("one transition per agent is required");
    const auto n = static_cast<std::ptrdiff_t>(agents_.size());
    if (exec == Execution::Parallel) {
        // Exceptions may not leave an OpenMP region; collect the first one and rethrow.
        std::exception_ptr failure;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            try {
                DqnAgent& a = agents_[static_cast<std::size_t>(i)];
                a.remember(std::move(transitions[static_cast<std::size_t>(i)]));
                a.learn();
            } catch (...) {
#pragma omp critical(rmcnoc_pool_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            DqnAgent& a = agents_[static_cast<std::size_t>(i)];
            a.remember(std::move(transitions[static_cast<std::size_t>(i)]));
            a.learn();
        }
    }
}

ConvergenceTracker::ConvergenceTracker(std::size_t window, double tolerance) : window_(window), tolerance_(tolerance) {
    if (window_ == 0) throw std::invalid_argument("convergence window must be positive");
}

void ConvergenceTracker::record(double mean_reward) { history_.push_back(mean_reward); }

std::optional<double> ConvergenceTracker::window_mean(std::size_t back) const {
    const std::size_t need = (back + 1) * window_;
    if (history_.size() < need) return std::nullopt;
    const std::size_t end = history_.size() - back * window_;
    double sum = 0.0;
    for (std::size_t i = end - window_; i < end; ++i) sum += history_[i];
    return sum / static_cast<double>(window_);
}

bool ConvergenceTracker::converged() const {
    const auto m0 = window_mean(0), m1 = window_mean(1), m2 = window_mean(2);
    if (!m0 || !m1 || !m2) return false;
    auto small = [&](double prev, double cur) { return std::abs(cur - prev) <= tolerance_ * std::abs(prev); };
    return small(*m2, *m1) && small(*m1, *m0);
}

}  // namespace rmcnoc
