#pragma once

// Multilayer perceptron with softmax cross-entropy, analytic backprop and a
// plain SGD step. Everything runs in double precision.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace peerlearn::nn {

enum class Activation { relu, tanh };
enum class Reduction { sum, mean };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);
Reduction parse_reduction(std::string_view name);
std::string_view to_string(Reduction r);

// Parameters are stored flat. Layer l occupies a contiguous block holding its
// weight matrix W_l (fan_out x fan_in, row-major) followed by its bias b_l.
// The activation is applied after every layer except the last, whose output
// is the logit vector.
struct Model {
    std::vector<std::size_t> layer_dims;
    std::vector<double> params;
    Activation activation = Activation::relu;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t num_classes() const { return layer_dims.back(); }
    std::size_t num_layers() const { return layer_dims.size() - 1; }

    friend bool operator==(const Model&, const Model&) = default;
};

struct LossConfig {
    // Label-smoothing coefficient; 0 gives plain cross-entropy.
    double smoothing = 0.0;
    Reduction reduction = Reduction::mean;

    void validate() const;
    friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct OptimizerConfig {
    double learning_rate = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

// One training pair as seen by the network. `x` must outlive the call.
struct Example {
    std::span<const double> x;
    std::size_t y;
};

std::size_t param_count(std::span<const std::size_t> layer_dims);

// Weights ~ N(0, 2/fan_in), biases zero. Bit-identical for equal inputs.
Model init_model(std::vector<std::size_t> layer_dims, std::uint64_t seed,
                 Activation activation = Activation::relu);

// Model with every parameter zero; useful as a base for hand-built weights.
Model zero_model(std::vector<std::size_t> layer_dims, Activation activation = Activation::relu);

std::vector<double> forward(const Model& model, std::span<const double> x);

// Logits of many inputs at once, one row per input.
struct LogitTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

LogitTable forward_batch(const Model& model, std::span<const std::span<const double>> inputs);

// Index of the largest logit, lowest index on ties.
std::size_t argmax(std::span<const double> logits);
std::size_t predict(const Model& model, std::span<const double> x);

// Cross-entropy of softmax(logits) against the target
// t = (1 - eps) * onehot(y) + eps / C, evaluated with max-shifted log-sum-exp.
double loss_from_logits(std::span<const double> logits, std::size_t y, double smoothing);
double per_example_loss(const Model& model, std::span<const double> x, std::size_t y,
                        const LossConfig& cfg);

// d(loss)/d(params) of the summed or averaged batch loss.
std::vector<double> gradient(const Model& model, std::span<const Example> batch,
                             const LossConfig& cfg);

// Total (not averaged) loss over a batch; handy for monitoring descent.
double batch_loss(const Model& model, std::span<const Example> batch, const LossConfig& cfg);

Model sgd_step(const Model& model, std::span<const double> grad, double learning_rate);
void sgd_step_inplace(Model& model, std::span<const double> grad, double learning_rate);

}  // namespace peerlearn::nn
