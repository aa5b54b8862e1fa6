#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rwsl/common.hpp"

namespace rwsl {

using Rng = std::mt19937_64;

enum class OutputActivation { Linear, Softmax };

/// Fully connected network. Hidden layers use ReLU; the last layer is linear
/// or a row softmax. Weights are stored input-major (in x out) so a forward
/// layer is `h * W + b`.
struct MlpModel {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;  // 1 x out
    OutputActivation output = OutputActivation::Linear;
    // Bumped on every parameter update; forward states remember it.
    std::uint64_t version = 0;

    /// Glorot-uniform weights, zero biases.
    static MlpModel glorot(const std::vector<std::size_t>& dims, OutputActivation output, Rng& rng);

    std::size_t n_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }

    void validate() const;
    bool parameters_finite() const;

    /// Weights then biases, layer by layer.
    std::vector<Matrix*> parameters();
    std::vector<const Matrix*> parameters() const;
};

/// Blends hidden activation l with an external representation:
///   h~(l) = (1 - epsilon) h(l) + epsilon * sources[l].
/// sources[l] must have the batch's row count and hidden layer l's width.
/// Sources are treated as constants by mlp_backward.
struct Mixing {
    std::span<const Matrix> sources;
    double epsilon = 0.0;
};

struct ForwardState {
    Matrix input;
    std::vector<Matrix> pre;     // pre-activation, one per layer
    std::vector<Matrix> hidden;  // what each hidden layer hands to the next one
    std::vector<Matrix> masks;   // inverted-dropout masks; empty at inference
    Matrix output;
    double mix_epsilon = 0.0;
    bool mixed = false;
    std::uint64_t model_version = 0;
};

/// Dropout (inverted scaling) acts on hidden activations only and only when
/// `training` is set.
ForwardState mlp_forward(const MlpModel& m, const Matrix& x, double dropout, bool training, Rng& rng,
                         const Mixing* mixing = nullptr);

struct MlpGradients {
    std::vector<Matrix> weights;
    std::vector<Matrix> biases;
    Matrix input;  // d loss / d x

    /// Same order as MlpModel::parameters().
    std::vector<const Matrix*> flat() const;
};

/// Exact gradients of the composed forward function. `output_grad` is the
/// gradient with respect to the model output (after softmax if any).
MlpGradients mlp_backward(const MlpModel& m, const ForwardState& state, const Matrix& output_grad);

struct AdamWOptions {
    double lr = 1e-3;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamWState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::uint64_t step = 0;
};

/// p <- p - lr*wd*p, then the bias-corrected Adam step. State is sized lazily
/// on the first call.
void adamw_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads, AdamWState& state,
                const AdamWOptions& opt);

struct LossAndGrad {
    double loss = 0.0;
    Matrix grad;
};

/// ||target - reconstruction||_F^2 / (2N), N = rows; gradient w.r.t. the
/// reconstruction.
LossAndGrad mse_loss(const Matrix& target, const Matrix& reconstruction);

constexpr double kProbabilityFloor = 1e-12;

/// Row-averaged KL(T || P) = (1/N) sum_i sum_j t_ij log(t_ij / p_ij), with p
/// floored at kProbabilityFloor. Gradient is w.r.t. p.
LossAndGrad kl_divergence(const Matrix& t, const Matrix& p);

Matrix row_softmax(const Matrix& logits);

/// KL(T || softmax(logits)) and its gradient w.r.t. the logits, (P - T)/N.
LossAndGrad softmax_kl(const Matrix& t, const Matrix& logits);

/// Rows sum to 1 within tol and entries are >= 0.
bool is_row_stochastic(const Matrix& p, double tol = 1e-6);

}  // namespace rwsl
