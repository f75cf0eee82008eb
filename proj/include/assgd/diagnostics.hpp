#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "assgd/dataset.hpp"
#include "assgd/model.hpp"

namespace assgd {

class Rng;

/// (1/n) sum_i grad L_i, regularizer excluded.
ModelParams full_gradient(const ModelParams& params, const Dataset& data, const LossSpec& spec);

/// ||grad L_i|| for every instance via batched backward passes.
std::vector<double> per_instance_grad_norms(const ModelParams& params, const Dataset& data, const LossSpec& spec);

/// Mean unregularized loss over the dataset.
double mean_loss(const ModelParams& params, const Dataset& data, const LossSpec& spec);

/// Fraction of misclassified instances (sign for scalar outputs, argmax otherwise).
double classification_error(const ModelParams& params, const Dataset& data);

/// p_i = ||g_i|| / sum_j ||g_j||; uniform when every norm is zero.
std::vector<double> optimal_distribution(std::span<const double> grad_norms);

struct VarianceReport {
    double full_gradient_norm = 0.0;
    double variance = 0.0;
    std::string distribution_label;
    std::size_t batch_size = 1;
};

/// Exact E||g - grad L||^2 of the re-weighted estimator g = g_i / (n p_i)
/// under `probs`, divided by the batch size. Enumerates every instance.
VarianceReport variance(const ModelParams& params, const Dataset& data, const LossSpec& spec,
                        std::span<const double> probs, std::size_t batch_size = 1, std::string label = {});

/// Variance from precomputed per-instance gradients (one row per instance).
double variance_from_gradients(const Eigen::MatrixXd& grads, std::span<const double> probs,
                               std::size_t batch_size = 1);

/// Per-instance gradients flattened into rows.
Eigen::MatrixXd per_instance_gradients(const ModelParams& params, const Dataset& data, const LossSpec& spec);

/// Same quantity from `draws` independent single draws (default 256).
double sampled_variance(const ModelParams& params, const Dataset& data, const LossSpec& spec,
                        std::span<const double> probs, std::size_t batch_size, Rng& rng, std::size_t draws = 256);

/// Entropy (natural log) of P(y|f) = 1 / (1 + exp(-f y)). Logistic loss only.
double uncertainty(const ModelParams& params, const FeatureVector& x, const LossSpec& spec);
/// ||d f_w(x) / d w|| over every parameter. Scalar-output models only.
double significance(const ModelParams& params, const FeatureVector& x);
double info_gain(double uncertainty, double significance, std::int64_t interval);

struct InfoGainRecord {
    double uncertainty = 0.0;
    double significance = 0.0;
    std::int64_t interval = 0;
    double info_gain = 0.0;
};

InfoGainRecord info_gain_record(const ModelParams& params, const FeatureVector& x, const LossSpec& spec,
                                std::int64_t interval);

/// sum_y P(y|f) ||grad L(f, y)|| for a logistic model. Reported next to
/// uncertainty * significance; the two are not equal in general.
double expected_grad_norm(const ModelParams& params, const FeatureVector& x, const LossSpec& spec);

/// Max over coordinates of |analytic - central| / max(1, |central|) for the
/// per-instance objective L_i + rho(w). Step is h_scale * max(1, |w_k|).
double finite_diff_check(const ModelParams& params, const Instance& instance, const LossSpec& spec,
                         double h_scale = 1e-6);

}  // namespace assgd
