#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace rmcnoc {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One fully connected layer. Weights are row-major, `outputs` rows of `inputs` columns.
struct DenseLayer {
    int inputs = 0;
    int outputs = 0;
    std::vector<double> weights;
    std::vector<double> biases;  ///< empty when the net has no bias terms

    double& w(int o, int i) { return weights[static_cast<std::size_t>(o * inputs + i)]; }
    double w(int o, int i) const { return weights[static_cast<std::size_t>(o * inputs + i)]; }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward Q-network: rectifier hidden layers, identity output.
class DenseNet {
public:
    DenseNet() = default;
    /// `sizes` lists every layer width, input first. All parameters start at zero.
    explicit DenseNet(std::vector<int> sizes, bool with_bias = true);

    /// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
    void init_glorot(std::mt19937_64& rng);

    const std::vector<int>& sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }
    bool has_bias() const { return with_bias_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::vector<double> forward(std::span<const double> input) const;
    /// Forward pass keeping every layer's post-activation output (index 0 is the input).
    void forward_trace(std::span<const double> input, std::vector<std::vector<double>>& acts) const;

    std::size_t parameter_count() const;
    /// Flattened as layer by layer, weights then biases.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> params);
    bool finite() const;

    friend bool operator==(const DenseNet&, const DenseNet&) = default;

private:
    std::vector<int> sizes_;
    bool with_bias_ = true;
    std::vector<DenseLayer> layers_;
};

struct Experience {
    std::vector<double> s;
    int a = 0;
    double r = 0.0;
    std::vector<double> s_next;
};

/// r + gamma * max(q_next).
double td_target(double r, std::span<const double> q_next, double gamma);

/// Targets for a batch, evaluated on `target_net`.
std::vector<double> td_targets(const DenseNet& target_net, std::span<const Experience> batch, double gamma);

/// Mean of 1/2 (y - Q(s, a))^2 with the targets held fixed.
double td_loss(const DenseNet& net, std::span<const Experience> batch, std::span<const double> targets);

/// Gradient of td_loss, flattened in DenseNet::parameters() order.
std::vector<double> td_gradient(const DenseNet& net, std::span<const Experience> batch,
                                std::span<const double> targets);

/// One SGD step on the TD loss; returns the loss before the step.
double train_step(DenseNet& net, const DenseNet& target_net, std::span<const Experience> batch, double alpha,
                  double gamma);

/// Max relative error between td_gradient and central differences of td_loss.
double gradient_check(const DenseNet& net, const DenseNet& target_net, std::span<const Experience> batch,
                      double gamma, double h = 1e-5);

/// Greedy action with lowest-index tie-break.
int argmax(std::span<const double> q);
/// Epsilon-greedy: with probability epsilon a uniform action, otherwise argmax.
int select_action(std::span<const double> q, double epsilon, std::mt19937_64& rng);

}  // namespace rmcnoc
