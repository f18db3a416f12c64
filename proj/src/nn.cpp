#include "peerlearn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "peerlearn/errors.hpp"

namespace peerlearn::nn {

namespace {

void check_dims(std::span<const std::size_t> dims) {
    if (dims.size() < 2) {
        throw ConfigError("layer_dims needs at least an input and an output size");
    }
    for (std::size_t d : dims) {
        if (d == 0) throw ConfigError("layer_dims entries must be >= 1");
    }
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;
using RowMajorMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

std::vector<std::size_t> layer_offsets(const Model& m) {
    std::vector<std::size_t> offsets(m.num_layers());
    for (std::size_t l = 0, off = 0; l < m.num_layers(); ++l) {
        offsets[l] = off;
        off += m.layer_dims[l] * m.layer_dims[l + 1] + m.layer_dims[l + 1];
    }
    return offsets;
}

ConstRowMajorMap weights(const Model& m, std::size_t offset, std::size_t l) {
    return {m.params.data() + offset, static_cast<Eigen::Index>(m.layer_dims[l + 1]),
            static_cast<Eigen::Index>(m.layer_dims[l])};
}

ConstVectorMap biases(const Model& m, std::size_t offset, std::size_t l) {
    return {m.params.data() + offset + m.layer_dims[l] * m.layer_dims[l + 1],
            static_cast<Eigen::Index>(m.layer_dims[l + 1])};
}

// Column k of every matrix belongs to input k. `outs[0]` is the input block,
// `pre[l]` the pre-activation of layer l, `outs[l + 1]` its output.
struct Trace {
    std::vector<Matrix> pre;
    std::vector<Matrix> outs;
};

Matrix input_block(const Model& m, std::span<const std::span<const double>> inputs) {
    Matrix x(static_cast<Eigen::Index>(m.input_dim()), static_cast<Eigen::Index>(inputs.size()));
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        if (inputs[k].size() != m.input_dim()) {
            throw ShapeError("input has " + std::to_string(inputs[k].size()) +
                             " features, model expects " + std::to_string(m.input_dim()));
        }
        x.col(static_cast<Eigen::Index>(k)) = ConstVectorMap(inputs[k].data(), inputs[k].size());
    }
    return x;
}

Trace run_forward(const Model& m, Matrix x) {
    const std::size_t layers = m.num_layers();
    const auto offsets = layer_offsets(m);
    Trace t;
    t.pre.resize(layers);
    t.outs.resize(layers + 1);
    t.outs[0] = std::move(x);
    for (std::size_t l = 0; l < layers; ++l) {
        t.pre[l] = weights(m, offsets[l], l) * t.outs[l];
        t.pre[l].colwise() += biases(m, offsets[l], l);
        if (l + 1 == layers) {
            t.outs[l + 1] = t.pre[l];
        } else if (m.activation == Activation::relu) {
            t.outs[l + 1] = t.pre[l].cwiseMax(0.0);
        } else {
            t.outs[l + 1] = t.pre[l].array().tanh().matrix();
        }
    }
    return t;
}

std::vector<double> smoothed_target(std::size_t classes, std::size_t y, double eps) {
    std::vector<double> t(classes, eps / static_cast<double>(classes));
    t[y] += 1.0 - eps;
    return t;
}

void check_label(const Model& m, std::size_t y) {
    if (y >= m.num_classes()) {
        throw LabelError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(m.num_classes()) + ")");
    }
}

}  // namespace

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Reduction parse_reduction(std::string_view name) {
    if (name == "sum") return Reduction::sum;
    if (name == "mean") return Reduction::mean;
    throw ConfigError("unknown reduction '" + std::string(name) + "'");
}

std::string_view to_string(Reduction r) { return r == Reduction::sum ? "sum" : "mean"; }

void LossConfig::validate() const {
    if (!(smoothing >= 0.0 && smoothing < 1.0)) {
        throw ConfigError("smoothing must lie in [0, 1)", "smoothing");
    }
}

void OptimizerConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be a positive finite number", "learning_rate");
    }
}

std::size_t param_count(std::span<const std::size_t> layer_dims) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        n += layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
    }
    return n;
}

Model zero_model(std::vector<std::size_t> layer_dims, Activation activation) {
    check_dims(layer_dims);
    Model m;
    m.params.assign(param_count(layer_dims), 0.0);
    m.layer_dims = std::move(layer_dims);
    m.activation = activation;
    return m;
}

Model init_model(std::vector<std::size_t> layer_dims, std::uint64_t seed, Activation activation) {
    Model m = zero_model(std::move(layer_dims), activation);
    std::mt19937_64 rng(seed);
    std::size_t offset = 0;
    for (std::size_t l = 0; l < m.num_layers(); ++l) {
        const std::size_t fan_in = m.layer_dims[l];
        const std::size_t fan_out = m.layer_dims[l + 1];
        std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        for (std::size_t k = 0; k < fan_in * fan_out; ++k) m.params[offset + k] = gauss(rng);
        offset += fan_in * fan_out + fan_out;
    }
    return m;
}

LogitTable forward_batch(const Model& model, std::span<const std::span<const double>> inputs) {
    LogitTable table;
    table.rows = inputs.size();
    table.cols = model.num_classes();
    table.values.resize(table.rows * table.cols);
    if (inputs.empty()) return table;
    const Trace t = run_forward(model, input_block(model, inputs));
    RowMajorMap(table.values.data(), static_cast<Eigen::Index>(table.rows),
                static_cast<Eigen::Index>(table.cols)) = t.outs.back().transpose();
    return table;
}

std::vector<double> forward(const Model& model, std::span<const double> x) {
    const std::span<const double> one[] = {x};
    return std::move(forward_batch(model, one).values);
}

std::size_t argmax(std::span<const double> logits) {
    return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) -
                                    logits.begin());
}

std::size_t predict(const Model& model, std::span<const double> x) {
    return argmax(forward(model, x));
}

double loss_from_logits(std::span<const double> logits, std::size_t y, double smoothing) {
    if (y >= logits.size()) {
        throw LabelError("label " + std::to_string(y) + " outside [0, " +
                         std::to_string(logits.size()) + ")");
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum_exp = 0.0;
    for (double z : logits) sum_exp += std::exp(z - top);
    const double lse = top + std::log(sum_exp);
    // The target sums to one, so -sum t_c log p_c = lse - sum t_c z_c.
    if (smoothing == 0.0) return lse - logits[y];
    const auto t = smoothed_target(logits.size(), y, smoothing);
    double loss = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) loss += t[c] * (lse - logits[c]);
    return loss;
}

double per_example_loss(const Model& model, std::span<const double> x, std::size_t y,
                        const LossConfig& cfg) {
    check_label(model, y);
    return loss_from_logits(forward(model, x), y, cfg.smoothing);
}

double batch_loss(const Model& model, std::span<const Example> batch, const LossConfig& cfg) {
    double total = 0.0;
    for (const Example& e : batch) total += per_example_loss(model, e.x, e.y, cfg);
    return total;
}

std::vector<double> gradient(const Model& model, std::span<const Example> batch,
                             const LossConfig& cfg) {
    if (batch.empty()) throw ContractError("gradient of an empty batch");
    std::vector<std::span<const double>> inputs;
    inputs.reserve(batch.size());
    for (const Example& e : batch) {
        check_label(model, e.y);
        inputs.push_back(e.x);
    }
    const Trace t = run_forward(model, input_block(model, inputs));
    const std::size_t layers = model.num_layers();
    const auto offsets = layer_offsets(model);
    const auto classes = static_cast<Eigen::Index>(model.num_classes());
    const double eps = cfg.smoothing;

    // dL/dz at the output: softmax(z) - target, one column per example.
    Matrix delta = t.outs.back();
    for (Eigen::Index k = 0; k < delta.cols(); ++k) {
        auto col = delta.col(k);
        col = (col.array() - col.maxCoeff()).exp().matrix();
        col /= col.sum();
        col.array() -= eps / static_cast<double>(classes);
        col(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(k)].y)) -= 1.0 - eps;
    }

    std::vector<double> grad(model.params.size(), 0.0);
    for (std::size_t l = layers; l-- > 0;) {
        const auto fan_in = static_cast<Eigen::Index>(model.layer_dims[l]);
        const auto fan_out = static_cast<Eigen::Index>(model.layer_dims[l + 1]);
        RowMajorMap(grad.data() + offsets[l], fan_out, fan_in).noalias() =
            delta * t.outs[l].transpose();
        Eigen::Map<Eigen::VectorXd>(grad.data() + offsets[l] + fan_in * fan_out, fan_out) =
            delta.rowwise().sum();
        if (l == 0) break;
        Matrix back = weights(model, offsets[l], l).transpose() * delta;
        if (model.activation == Activation::relu) {
            back = back.cwiseProduct((t.pre[l - 1].array() > 0.0).cast<double>().matrix());
        } else {
            back = back.cwiseProduct((1.0 - t.outs[l].array().square()).matrix());
        }
        delta = std::move(back);
    }

    if (cfg.reduction == Reduction::mean) {
        const double scale = 1.0 / static_cast<double>(batch.size());
        for (double& g : grad) g *= scale;
    }
    return grad;
}

void sgd_step_inplace(Model& model, std::span<const double> grad, double learning_rate) {
    if (grad.size() != model.params.size()) {
        throw ShapeError("gradient has " + std::to_string(grad.size()) + " entries, model has " +
                         std::to_string(model.params.size()));
    }
    for (std::size_t k = 0; k < grad.size(); ++k) model.params[k] -= learning_rate * grad[k];
    for (double p : model.params) {
        if (!std::isfinite(p)) throw Error("SGD step produced a non-finite parameter");
    }
}

Model sgd_step(const Model& model, std::span<const double> grad, double learning_rate) {
    Model next = model;
    sgd_step_inplace(next, grad, learning_rate);
    return next;
}

}  // namespace peerlearn::nn
