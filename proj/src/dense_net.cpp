#include "rmcnoc/dense_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rmcnoc {

DenseNet::DenseNet(std::vector<int> sizes, bool with_bias) : sizes_(std::move(sizes)), with_bias_(with_bias) {
    if (sizes_.size() < 2) throw std::invalid_argument("a dense net needs at least an input and an output layer");
    for (int s : sizes_)
        if (s < 1) throw std::invalid_argument("layer sizes must be positive");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        DenseLayer layer;
        layer.inputs = sizes_[l];
        layer.outputs = sizes_[l + 1];
        layer.weights.assign(static_cast<std::size_t>(layer.inputs * layer.outputs), 0.0);
        if (with_bias_) layer.biases.assign(static_cast<std::size_t>(layer.outputs), 0.0);
        layers_.push_back(std::move(layer));
    }
}

void DenseNet::init_glorot(std::mt19937_64& rng) {
    for (DenseLayer& layer : layers_) {
        const double limit = std::sqrt(6.0 / (layer.inputs + layer.outputs));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : layer.weights) w = dist(rng);
        std::fill(layer.biases.begin(), layer.biases.end(), 0.0);
    }
}

void DenseNet::forward_trace(std::span<const double> input, std::vector<std::vector<double>>& acts) const {
    if (static_cast<int>(input.size()) != input_size())
        throw std::invalid_argument("input has " + std::to_string(input.size()) + " values, net expects " +
                                    std::to_string(input_size()));
    acts.resize(sizes_.size());
    acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const DenseLayer& layer = layers_[l];
        const std::vector<double>& x = acts[l];
        std::vector<double>& y = acts[l + 1];
        y.resize(static_cast<std::size_t>(layer.outputs));
        const bool hidden = l + 1 < layers_.size();
        for (int o = 0; o < layer.outputs; ++o) {
            double z = with_bias_ ? layer.biases[static_cast<std::size_t>(o)] : 0.0;
            const double* row = &layer.weights[static_cast<std::size_t>(o * layer.inputs)];
            for (int i = 0; i < layer.inputs; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
            y[static_cast<std::size_t>(o)] = hidden ? std::max(0.0, z) : z;
        }
    }
}

std::vector<double> DenseNet::forward(std::span<const double> input) const {
    thread_local std::vector<std::vector<double>> acts;
    forward_trace(input, acts);
    return acts.back();
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
}

std::vector<double> DenseNet::parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const DenseLayer& l : layers_) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.biases.begin(), l.biases.end());
    }
    return out;
}

void DenseNet::set_parameters(std::span<const double> params) {
    if (params.size() != parameter_count())
        throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) + " values, net has " +
                                    std::to_string(parameter_count()));
    std::size_t k = 0;
    for (DenseLayer& l : layers_) {
        for (double& w : l.weights) w = params[k++];
        for (double& b : l.biases) b = params[k++];
    }
}

bool DenseNet::finite() const {
    for (const DenseLayer& l : layers_) {
        for (double w : l.weights)
            if (!std::isfinite(w)) return false;
        for (double b : l.biases)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

double td_target(double r, std::span<const double> q_next, double gamma) {
    return r + gamma * *std::max_element(q_next.begin(), q_next.end());
}

std::vector<double> td_targets(const DenseNet& target_net, std::span<const Experience> batch, double gamma) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const Experience& e : batch) y.push_back(td_target(e.r, target_net.forward(e.s_next), gamma));
    return y;
}

double td_loss(const DenseNet& net, std::span<const Experience> batch, std::span<const double> targets) {
    double sum = 0.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const std::vector<double> q = net.forward(batch[k].s);
        const double err = targets[k] - q[static_cast<std::size_t>(batch[k].a)];
        sum += 0.5 * err * err;
    }
    return sum / static_cast<double>(batch.size());
}

std::vector<double> td_gradient(const DenseNet& net, std::span<const Experience> batch,
                                std::span<const double> targets) {
    const auto& layers = net.layers();
    const auto n = static_cast<double>(batch.size());

    // Per-layer gradient buffers laid out like the layers.
    std::vector<std::vector<double>> gw(layers.size()), gb(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        gw[l].assign(layers[l].weights.size(), 0.0);
        gb[l].assign(layers[l].biases.size(), 0.0);
    }

    std::vector<std::vector<double>> acts;
    std::vector<double> delta, prev;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const Experience& e = batch[k];
        net.forward_trace(e.s, acts);
        if (e.a < 0 || e.a >= net.output_size()) throw std::invalid_argument("experience action out of range");

        // dL/dQ for this sample; only the taken action carries error.
        delta.assign(static_cast<std::size_t>(net.output_size()), 0.0);
        delta[static_cast<std::size_t>(e.a)] = -(targets[k] - acts.back()[static_cast<std::size_t>(e.a)]) / n;

        for (std::size_t l = layers.size(); l-- > 0;) {
            const DenseLayer& layer = layers[l];
            const std::vector<double>& x = acts[l];
            for (int o = 0; o < layer.outputs; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                double* grow = &gw[l][static_cast<std::size_t>(o * layer.inputs)];
                for (int i = 0; i < layer.inputs; ++i) grow[i] += d * x[static_cast<std::size_t>(i)];
                if (!gb[l].empty()) gb[l][static_cast<std::size_t>(o)] += d;
            }
            if (l == 0) break;
            prev.assign(static_cast<std::size_t>(layer.inputs), 0.0);
            for (int o = 0; o < layer.outputs; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                if (d == 0.0) continue;
                for (int i = 0; i < layer.inputs; ++i) prev[static_cast<std::size_t>(i)] += layer.w(o, i) * d;
            }
            // Rectifier derivative on the layer's input (a hidden activation).
            for (int i = 0; i < layer.inputs; ++i)
                if (x[static_cast<std::size_t>(i)] <= 0.0) prev[static_cast<std::size_t>(i)] = 0.0;
            delta.swap(prev);
        }
    }

    std::vector<double> out;
    out.reserve(net.parameter_count());
    for (std::size_t l = 0; l < layers.size(); ++l) {
        out.insert(out.end(), gw[l].begin(), gw[l].end());
        out.insert(out.end(), gb[l].begin(), gb[l].end());
    }
    return out;
}

double train_step(DenseNet& net, const DenseNet& target_net, std::span<const Experience> batch, double alpha,
                  double gamma) {
    if (batch.empty()) throw std::invalid_argument("train_step needs a nonempty batch");
    const std::vector<double> y = td_targets(target_net, batch, gamma);
    const double loss = td_loss(net, batch, y);
    const std::vector<double> grad = td_gradient(net, batch, y);
    for (double g : grad)
        if (!std::isfinite(g)) throw TrainingError("non-finite TD gradient (loss " + std::to_string(loss) + ")");

    std::size_t k = 0;
    for (DenseLayer& layer : net.layers()) {
        for (double& w : layer.weights) w -= alpha * grad[k++];
        for (double& b : layer.biases) b -= alpha * grad[k++];
    }
    if (!net.finite()) throw TrainingError("non-finite weights after TD update");
    return loss;
}

double gradient_check(const DenseNet& net, const DenseNet& target_net, std::span<const Experience> batch,
                      double gamma, double h) {
    const std::vector<double> y = td_targets(target_net, batch, gamma);
    const std::vector<double> analytic = td_gradient(net, batch, y);
    std::vector<double> params = net.parameters();
    DenseNet probe = net;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double saved = params[p];
        params[p] = saved + h;
        probe.set_parameters(params);
        const double up = td_loss(probe, batch, y);
        params[p] = saved - h;
        probe.set_parameters(params);
        const double down = td_loss(probe, batch, y);
        params[p] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[p]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic[p] - numeric) / scale);
    }
    return worst;
}

int argmax(std::span<const double> q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i)
        if (q[static_cast<std::size_t>(i)] > q[static_cast<std::size_t>(best)]) best = i;
    return best;
}

int select_action(std::span<const double> q, double epsilon, std::mt19937_64& rng) {
    if (epsilon > 0.0) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u < epsilon) return static_cast<int>(rng() % q.size());
    }
    return argmax(q);
}

}  // namespace rmcnoc
