#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "rmcnoc/agent.hpp"
#include "rmcnoc/dense_net.hpp"
#include "rmcnoc/weights.hpp"

using namespace rmcnoc;

namespace {

std::vector<double> one_hot(int n, int k) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(k)] = 1.0;
    return v;
}

std::vector<Experience> random_batch(const std::vector<int>& sizes, int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0), r(-10.0, 0.0);
    std::vector<Experience> batch;
    for (int i = 0; i < n; ++i) {
        Experience e;
        for (int k = 0; k < sizes.front(); ++k) {
            e.s.push_back(u(rng));
            e.s_next.push_back(u(rng));
        }
        e.a = static_cast<int>(rng() % static_cast<std::uint64_t>(sizes.back()));
        e.r = r(rng);
        batch.push_back(e);
    }
    return batch;
}

DenseNet random_net(const std::vector<int>& sizes, std::uint64_t seed) {
    DenseNet net(sizes);
    std::mt19937_64 rng(seed);
    net.init_glorot(rng);
    // Non-zero biases so their gradients are exercised too.
    std::uniform_real_distribution<double> b(-0.3, 0.3);
    for (auto& layer : net.layers())
        for (double& x : layer.biases) x = b(rng);
    return net;
}

}  // namespace

TEST(DenseNet, ZeroWeightsGiveZeroOutput) {
    const DenseNet net({8, 5, 3});
    const std::vector<double> in{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    EXPECT_EQ(net.forward(in), (std::vector<double>{0.0, 0.0, 0.0}));
    EXPECT_EQ(net.output_size(), 3);
}

TEST(DenseNet, HandComputedToyNet) {
    // 2-2-1: h = relu([[1, -1], [0.5, 2]] x + [0, -1]), y = [2, -3] h + 0.5
    DenseNet net({2, 2, 1});
    auto& l0 = net.layers()[0];
    l0.weights = {1.0, -1.0, 0.5, 2.0};
    l0.biases = {0.0, -1.0};
    auto& l1 = net.layers()[1];
    l1.weights = {2.0, -3.0};
    l1.biases = {0.5};
    // x = (3, 1): h = relu(2, 2.5) = (2, 2.5); y = 4 - 7.5 + 0.5 = -3
    EXPECT_DOUBLE_EQ(net.forward(std::vector<double>{3.0, 1.0})[0], -3.0);
    // x = (0, 1): h = relu(-1, 1) = (0, 1); y = -3 + 0.5 = -2.5
    EXPECT_DOUBLE_EQ(net.forward(std::vector<double>{0.0, 1.0})[0], -2.5);
}

TEST(DenseNet, ParameterRoundTrip) {
    DenseNet net = random_net({19, 30, 3}, 4);
    EXPECT_EQ(net.parameter_count(), 19u * 30 + 30 + 30 * 3 + 3);
    DenseNet copy({19, 30, 3});
    copy.set_parameters(net.parameters());
    EXPECT_EQ(copy, net);
}

TEST(DenseNet, GlorotBounds) {
    DenseNet net({8, 5, 3});
    std::mt19937_64 rng(1);
    net.init_glorot(rng);
    const double lim0 = std::sqrt(6.0 / 13.0), lim1 = std::sqrt(6.0 / 8.0);
    for (double w : net.layers()[0].weights) EXPECT_LE(std::abs(w), lim0);
    for (double w : net.layers()[1].weights) EXPECT_LE(std::abs(w), lim1);
    for (double b : net.layers()[0].biases) EXPECT_EQ(b, 0.0);
}

TEST(TdTarget, Examples) {
    const std::vector<double> q{-2.0, -5.0, -9.0};
    EXPECT_NEAR(td_target(-8.0, q, 0.99), -9.98, 1e-12);
    EXPECT_EQ(td_target(-8.0, q, 0.0), -8.0);
    EXPECT_EQ(td_target(-3.0, std::vector<double>{0.0, 0.0, 0.0}, 0.99), -3.0);
}

TEST(TrainStep, TabularFromZero) {
    DenseNet net({3, 3}, false);
    const Experience e{one_hot(3, 0), 1, -3.0, one_hot(3, 2)};
    const DenseNet target = net;
    train_step(net, target, std::span(&e, 1), 0.001, 0.99);
    EXPECT_NEAR(net.forward(one_hot(3, 0))[1], -0.003, 1e-15);
}

TEST(TrainStep, TabularWithBootstrap) {
    DenseNet net({3, 3}, false);
    net.layers()[0].w(1, 0) = -1.0;  // Q(s0, a1)
    net.layers()[0].w(0, 2) = -2.0;  // Q(s2, a0) is the max over s2: others set lower
    net.layers()[0].w(1, 2) = -4.0;
    net.layers()[0].w(2, 2) = -3.0;
    const Experience e{one_hot(3, 0), 1, -8.0, one_hot(3, 2)};
    const DenseNet target = net;
    train_step(net, target, std::span(&e, 1), 0.001, 0.99);
    EXPECT_NEAR(net.forward(one_hot(3, 0))[1], -1.00898, 1e-12);
}

TEST(TrainStep, ZeroTdErrorLeavesWeights) {
    DenseNet net({3, 3}, false);
    net.layers()[0].w(0, 0) = -5.0;
    const Experience e{one_hot(3, 0), 0, -5.0, one_hot(3, 1)};
    const DenseNet before = net;
    train_step(net, DenseNet({3, 3}, false), std::span(&e, 1), 0.001, 0.99);
    EXPECT_EQ(net, before);
}

TEST(TrainStep, NonFiniteAborts) {
    DenseNet net({2, 2}, false);
    const Experience e{{1.0, 0.0}, 0, std::nan(""), {0.0, 1.0}};
    EXPECT_THROW(train_step(net, net, std::span(&e, 1), 0.001, 0.99), TrainingError);
}

TEST(TrainStep, MatchesTabularOracle) {
    constexpr int kStates = 6, kActions = 3;
    std::mt19937_64 rng(2024);
    DenseNet net({kStates, kActions}, false);
    std::uniform_real_distribution<double> init(-5.0, 0.0), reward(-50.0, 0.0);
    double table[kStates][kActions];
    for (int s = 0; s < kStates; ++s)
        for (int a = 0; a < kActions; ++a) table[s][a] = net.layers()[0].w(a, s) = init(rng);

    const double alpha = 0.001, gamma = 0.99;
    for (int t = 0; t < 1000; ++t) {
        const int s = static_cast<int>(rng() % kStates), a = static_cast<int>(rng() % kActions);
        const int s2 = static_cast<int>(rng() % kStates);
        const double r = reward(rng);
        double best = table[s2][0];
        for (int k = 1; k < kActions; ++k) best = std::max(best, table[s2][k]);
        table[s][a] += alpha * (r + gamma * best - table[s][a]);
        const Experience e{one_hot(kStates, s), a, r, one_hot(kStates, s2)};
        const DenseNet bootstrap = net;
        train_step(net, bootstrap, std::span(&e, 1), alpha, gamma);
    }
    double worst = 0.0;
    for (int s = 0; s < kStates; ++s)
        for (int a = 0; a < kActions; ++a) worst = std::max(worst, std::abs(table[s][a] - net.layers()[0].w(a, s)));
    EXPECT_LT(worst, 1e-12);
}

TEST(TrainStep, OnlineAgentMatchesTabularOracle) {
    constexpr int kStates = 4, kActions = 3;
    AgentConfig cfg;
    cfg.use_replay = false;
    cfg.use_target = false;
    cfg.with_bias = false;
    DqnAgent agent({kStates, kActions}, cfg, 5);
    double table[kStates][kActions];
    for (int s = 0; s < kStates; ++s)
        for (int a = 0; a < kActions; ++a) table[s][a] = agent.net().layers()[0].w(a, s);
    std::mt19937_64 rng(77);
    for (int t = 0; t < 1000; ++t) {
        const int s = static_cast<int>(rng() % kStates), a = static_cast<int>(rng() % kActions);
        const int s2 = static_cast<int>(rng() % kStates);
        const double r = -static_cast<double>(rng() % 51);
        const double best = std::max({table[s2][0], table[s2][1], table[s2][2]});
        table[s][a] += cfg.alpha * (r + cfg.gamma * best - table[s][a]);
        agent.remember({one_hot(kStates, s), a, r, one_hot(kStates, s2)});
        ASSERT_TRUE(agent.learn().has_value());
    }
    for (int s = 0; s < kStates; ++s)
        for (int a = 0; a < kActions; ++a) EXPECT_NEAR(table[s][a], agent.net().layers()[0].w(a, s), 1e-12);
}

TEST(GradientCheck, RaceShape) {
    std::mt19937_64 rng(3);
    const DenseNet net = random_net({8, 5, 3}, 10), target = random_net({8, 5, 3}, 11);
    EXPECT_LT(gradient_check(net, target, random_batch({8, 5, 3}, 16, rng), 0.99), 1e-4);
}

TEST(GradientCheck, CureShape) {
    std::mt19937_64 rng(4);
    const DenseNet net = random_net({19, 30, 3}, 12), target = random_net({19, 30, 3}, 13);
    EXPECT_LT(gradient_check(net, target, random_batch({19, 30, 3}, 16, rng), 0.99), 1e-4);
}

TEST(GradientCheck, WiderActionSpaces) {
    std::mt19937_64 rng(5);
    for (int actions : {5, 7}) {
        const DenseNet net = random_net({8, 5, actions}, 20 + actions), target = random_net({8, 5, actions}, 30);
        EXPECT_LT(gradient_check(net, target, random_batch({8, 5, actions}, 16, rng), 0.99), 1e-4);
    }
}

TEST(GradientCheck, SingleParameterLinear) {
    DenseNet net({1, 1}, false);
    net.layers()[0].weights = {0.7};
    const Experience e{{2.0}, 0, -1.5, {0.5}};
    const DenseNet target = net;
    EXPECT_LT(gradient_check(net, target, std::span(&e, 1), 0.9), 1e-8);
}

TEST(GradientCheck, ZeroLossZeroGradient) {
    DenseNet net({2, 2}, false);
    const Experience e{{1.0, 0.0}, 0, 0.0, {0.0, 1.0}};
    const std::vector<double> y{0.0};
    for (double g : td_gradient(net, std::span(&e, 1), y)) EXPECT_EQ(g, 0.0);
    EXPECT_EQ(gradient_check(net, net, std::span(&e, 1), 0.99), 0.0);
}

TEST(SelectAction, GreedyAndTies) {
    std::mt19937_64 rng(1);
    EXPECT_EQ(select_action(std::vector<double>{-3.0, -1.0, -2.5}, 0.0, rng), 1);
    EXPECT_EQ(select_action(std::vector<double>{-1.0, -1.0, -1.0}, 0.0, rng), 0);
    EXPECT_EQ(argmax(std::vector<double>{-3.0, -1.0, -1.0}), 1);
}

TEST(SelectAction, UniformUnderFullExploration) {
    std::mt19937_64 rng(123);
    std::array<int, 3> counts{};
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(select_action(std::vector<double>{0.0, 5.0, 1.0}, 1.0, rng))];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 3.0) * (c - n / 3.0) / (n / 3.0);
    EXPECT_LT(chi2, 13.82);  // chi-square, 2 degrees of freedom, p = 0.001
}

TEST(Epsilon, LinearDecayThenHold) {
    AgentConfig cfg;
    EXPECT_DOUBLE_EQ(epsilon_at(cfg, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(epsilon_at(cfg, 0.25), 0.525);
    EXPECT_DOUBLE_EQ(epsilon_at(cfg, 0.5), 0.05);
    EXPECT_DOUBLE_EQ(epsilon_at(cfg, 0.9), 0.05);
}

TEST(Replay, RingOverwritesOldest) {
    ReplayBuffer buf(3);
    for (int i = 0; i < 5; ++i) buf.push({{}, i, 0.0, {}});
    ASSERT_EQ(buf.size(), 3u);
    std::multiset<int> held;
    for (std::size_t i = 0; i < buf.size(); ++i) held.insert(buf[i].a);
    EXPECT_EQ(held, (std::multiset<int>{2, 3, 4}));
}

TEST(Agent, TargetSyncPeriod) {
    AgentConfig cfg;
    cfg.batch_size = 2;
    cfg.target_sync = 3;
    DqnAgent agent({8, 5, 3}, cfg, 9);
    std::mt19937_64 rng(1);
    for (const Experience& e : random_batch({8, 5, 3}, 4, rng)) agent.remember(e);
    for (int i = 0; i < 2; ++i) agent.learn();
    EXPECT_NE(agent.net(), agent.target_net());
    agent.learn();
    EXPECT_EQ(agent.net(), agent.target_net());
}

TEST(Agent, SeedsAreDeterministicAndDistinct) {
    EXPECT_EQ(agent_seed(1, "ch0-1"), agent_seed(1, "ch0-1"));
    EXPECT_NE(agent_seed(1, "ch0-1"), agent_seed(1, "ch1-2"));
    EXPECT_NE(agent_seed(1, "ch0-1"), agent_seed(2, "ch0-1"));
}

TEST(AgentPool, ParallelMatchesSerial) {
    std::vector<std::string> keys;
    for (int i = 0; i < 24; ++i) keys.push_back("ch" + std::to_string(i));
    AgentConfig cfg;
    AgentPool serial(keys, {8, 5, 3}, cfg), parallel(keys, {8, 5, 3}, cfg);
    std::mt19937_64 rng(8);
    std::vector<int> as, ap;
    for (int step = 0; step < 60; ++step) {
        std::vector<Experience> ts = random_batch({8, 5, 3}, 24, rng), tp = ts;
        std::vector<std::vector<double>> obs;
        for (const auto& t : ts) obs.push_back(t.s);
        serial.act(obs, 0.3, as, Execution::Serial);
        parallel.act(obs, 0.3, ap, Execution::Parallel);
        EXPECT_EQ(as, ap);
        serial.update(ts, Execution::Serial);
        parallel.update(tp, Execution::Parallel);
    }
    for (std::size_t i = 0; i < keys.size(); ++i) EXPECT_EQ(serial.agent(i).net(), parallel.agent(i).net());
}

TEST(AgentPool, UpdateOrderDoesNotCouple) {
    std::vector<std::string> keys{"a", "b", "c"}, reversed{"c", "b", "a"};
    AgentConfig cfg;
    cfg.batch_size = 1;
    AgentPool p1(keys, {8, 5, 3}, cfg), p2(reversed, {8, 5, 3}, cfg);
    std::mt19937_64 rng(6);
    for (int step = 0; step < 30; ++step) {
        std::vector<Experience> t1 = random_batch({8, 5, 3}, 3, rng);
        std::vector<Experience> t2{t1[2], t1[1], t1[0]};
        p1.update(t1);
        p2.update(t2);
    }
    EXPECT_EQ(p1.agent(0).net(), p2.agent(2).net());
    EXPECT_EQ(p1.agent(2).net(), p2.agent(0).net());
}

TEST(AgentPool, ParallelPropagatesFailure) {
    AgentConfig cfg;
    cfg.batch_size = 1;
    AgentPool pool({"a", "b"}, {2, 2}, cfg);
    std::vector<Experience> t{{{1.0, 0.0}, 0, -1.0, {0.0, 1.0}}, {{1.0, 0.0}, 0, std::nan(""), {0.0, 1.0}}};
    EXPECT_THROW(pool.update(t, Execution::Parallel), TrainingError);
}

TEST(Convergence, PlateauDetection) {
    ConvergenceTracker flat(10, 0.01);
    for (int i = 0; i < 30; ++i) flat.record(-2.0);
    EXPECT_TRUE(flat.converged());
    ConvergenceTracker rising(10, 0.01);
    for (int i = 0; i < 30; ++i) rising.record(-10.0 + i * 0.2);
    EXPECT_FALSE(rising.converged());
    ConvergenceTracker short_history(10, 0.01);
    for (int i = 0; i < 29; ++i) short_history.record(-2.0);
    EXPECT_FALSE(short_history.converged());
}

TEST(Weights, RoundTripIsBitExact) {
    std::vector<std::string> keys;
    for (int i = 0; i < 112; ++i) keys.push_back("ch" + std::to_string(i));
    AgentPool pool(keys, {8, 5, 3}, AgentConfig{});
    const WeightSet set = weights_from_pool(pool, "race", 8, 8, 4);
    EXPECT_EQ(set.nets.size(), 112u);
    const auto path = std::filesystem::temp_directory_path() / "rmcnoc_weights_test.json";
    save_weights(path, set);
    const WeightSet back = load_weights(path);
    EXPECT_EQ(back.keys, set.keys);
    AgentPool restored(keys, {8, 5, 3}, AgentConfig{.seed = 99});
    load_into_pool(back, restored);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x(8);
        for (double& v : x) v = u(rng);
        const std::size_t k = static_cast<std::size_t>(i) % keys.size();
        EXPECT_EQ(pool.agent(k).q_values(x), restored.agent(k).q_values(x));
    }
}

TEST(Weights, ShapeAndVersionMismatch) {
    AgentPool pool({"ch0", "ch1"}, {8, 5, 3}, AgentConfig{});
    const WeightSet set = weights_from_pool(pool, "race", 2, 1, 4);
    EXPECT_NO_THROW(check_weights(set, "race", 2, 1, 4, {8, 5, 3}));
    EXPECT_THROW(check_weights(set, "race", 2, 1, 6, {8, 5, 5}), WeightFormatError);
    EXPECT_THROW(check_weights(set, "cure", 2, 1, 4, {8, 5, 3}), WeightFormatError);
    EXPECT_THROW(check_weights(set, "race", 4, 4, 4, {8, 5, 3}), WeightFormatError);

    std::string text = serialize_weights(set);
    const auto pos = text.find("\"version\": 1");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 12, "\"version\": 7");
    EXPECT_THROW(parse_weights(text), WeightFormatError);
    EXPECT_THROW(parse_weights("{}"), WeightFormatError);
    EXPECT_THROW(parse_weights("not json"), WeightFormatError);
}
