#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "assgd/dataset.hpp"

namespace assgd {

class Rng;

enum class Activation { identity, sigmoid, tanh, relu };

double activate(Activation a, double z) noexcept;
/// Derivative with respect to the pre-activation; relu'(0) = 0.
double activate_derivative(Activation a, double z) noexcept;

/// One affine map followed by an activation: H' = act(W H + B).
/// `weight` is outputs x inputs.
struct Layer {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
    bool has_bias = true;
    Activation activation = Activation::identity;

    std::size_t inputs() const noexcept { return static_cast<std::size_t>(weight.cols()); }
    std::size_t outputs() const noexcept { return static_cast<std::size_t>(weight.rows()); }
};

enum class ModelKind { linear, mlp };

/// Parameter container for both model families. A linear model is a single
/// bias-free identity layer (outputs = 1 for binary losses, C for softmax).
/// Gradients share this type.
struct ModelParams {
    ModelKind kind = ModelKind::linear;
    std::vector<Layer> layers;

    static ModelParams linear(std::size_t dimension, std::size_t outputs = 1);
    /// widths = {input, hidden..., output}; hidden layers use `hidden`,
    /// the last layer uses `output`.
    static ModelParams mlp(std::span<const std::size_t> widths, Activation hidden,
                           Activation output = Activation::identity);

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;

    /// Same shape, every entry zero.
    ModelParams zeros_like() const;
    /// Uniform(-s, s) weights with s = scale * sqrt(6 / (in + out)); biases zero.
    void randomize(Rng& rng, double scale = 1.0);

    bool all_finite() const;
    double squared_norm() const;

    /// Per layer: weights row-major, then bias (if present).
    Eigen::VectorXd flatten() const;
    void assign_flat(const Eigen::VectorXd& flat);

    /// this += a * other (shapes must match)
    ModelParams& axpy(double a, const ModelParams& other);
    ModelParams& scale(double a);

    void check_same_shape(const ModelParams& other) const;
};

enum class LossKind { squared, hinge, logistic, softmax_cross_entropy };
enum class RegularizerKind { none, l2, l1 };

struct LossSpec {
    LossKind loss = LossKind::logistic;
    RegularizerKind regularizer = RegularizerKind::none;
    double lambda = 0.0;
};

std::string_view to_string(Activation a);
std::string_view to_string(LossKind k);
std::string_view to_string(RegularizerKind k);
Activation parse_activation(std::string_view s);
LossKind parse_loss(std::string_view s);
RegularizerKind parse_regularizer(std::string_view s);

/// Model output f_w(x): length 1 for scalar models, C for multi-class.
Eigen::VectorXd predict(const ModelParams& params, const FeatureVector& x);

double loss_value(LossKind kind, const Eigen::VectorXd& output, int label);
/// dL/df for a single output vector; subgradient 0 on the hinge kink.
Eigen::VectorXd loss_derivative(LossKind kind, const Eigen::VectorXd& output, int label);

/// Unregularized per-instance loss.
double loss(const ModelParams& params, const Instance& instance, const LossSpec& spec);

double regularizer_value(const ModelParams& params, const LossSpec& spec);
/// l2: 2 lambda w, l1: lambda sign(w) with sign(0) = 0. Biases excluded.
ModelParams regularizer_gradient(const ModelParams& params, const LossSpec& spec);

struct WeightedInstance {
    const Instance* instance;
    double weight = 1.0;
};

struct BackwardOptions {
    bool per_sample_norms = true;
};

struct BatchBackwardResult {
    /// (1/b) * sum_i weight_i * grad L_i
    ModelParams avg_gradient;
    /// Norm of each unweighted per-sample gradient (weights and biases).
    std::vector<double> per_sample_grad_norms;
    std::vector<double> per_sample_losses;
};

/// Batched forward/backward pass. Per-sample norms use the per-layer
/// factorisation ||dZ_i||^2 * (||H_i||^2 + [bias]) summed over layers, so no
/// per-sample gradient matrix is ever formed.
BatchBackwardResult batch_backward(const ModelParams& params, std::span<const WeightedInstance> batch,
                                   const LossSpec& spec, const BackwardOptions& options = {});

/// Adds ||dZ_i||^2 * (||H_i||^2 + bias_term) to out[i] for every row i.
void accumulate_layer_norms(const Eigen::MatrixXd& dz, const Eigen::MatrixXd& h, double bias_term,
                            std::span<double> out);

/// Gradient of one instance's loss, built by explicit per-layer outer
/// products (no batching).
ModelParams instance_gradient(const ModelParams& params, const Instance& instance, const LossSpec& spec);

/// Gradient of the scalar model output with respect to every parameter.
/// Requires output_dim() == 1.
ModelParams output_gradient(const ModelParams& params, const FeatureVector& x);

/// Euclidean norm of the fully materialised per-instance gradient.
double grad_norm_explicit(const ModelParams& params, const Instance& instance, const LossSpec& spec);

/// Checks that a loss/model/dataset combination is usable.
void check_compatible(const ModelParams& params, const Dataset& data, const LossSpec& spec);

}  // namespace assgd
