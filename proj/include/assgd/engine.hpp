#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "assgd/dataset.hpp"
#include "assgd/metrics.hpp"
#include "assgd/model.hpp"

namespace assgd {

enum class Algorithm { mbsgd, optimal, assgd, ashr };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

struct ModelConfig {
    ModelKind kind = ModelKind::linear;
    /// Hidden widths for the MLP; ignored for linear models.
    std::vector<std::size_t> hidden;
    Activation activation = Activation::sigmoid;
    double init_scale = 1.0;
};

enum class VarianceTracking { none, exact, sampled };

/// gamma_t from (stage index, subset size m, latest variance estimate or NaN).
using GammaPolicy = std::function<double(std::size_t stage, std::size_t m, double variance)>;

struct StageConfig {
    /// Subset size; 0 selects ceil(n / 16).
    std::size_t m = 0;
    /// Iterations per stage; 0 selects ceil(passes * m / b).
    std::size_t g = 0;
    std::size_t passes = 16;
    /// Without a policy, gamma_s = gamma * (1 + gamma_growth * s) for stage s.
    double gamma = 1e-3;
    double gamma_growth = 0.0;
    GammaPolicy gamma_policy;
};

struct TrainConfig {
    Algorithm algorithm = Algorithm::mbsgd;
    double eta = 0.1;
    /// eta_t = eta / (1 + lr_decay * (t - 1)); 0 keeps eta constant.
    double lr_decay = 0.0;
    std::size_t batch_size = 128;
    std::size_t iterations = 1000;
    double beta = 0.1;
    std::uint64_t seed = 0;
    std::size_t eval_every = 100;
    LossSpec loss;
    ModelConfig model;
    /// Sampling weight of an instance before its first visit.
    double initial_weight = 1.0;
    VarianceTracking variance = VarianceTracking::none;
    std::size_t variance_draws = 256;
    StageConfig stage;

    void validate() const;
    double learning_rate(std::size_t t) const { return eta / (1.0 + lr_decay * static_cast<double>(t - 1)); }
};

/// Resolved stage sizes for a dataset of n instances.
struct StagePlan {
    std::size_t m;
    std::size_t g;
};
StagePlan plan_stages(const StageConfig& stage, std::size_t n, std::size_t batch_size);

struct StageRecord {
    std::vector<std::size_t> subset;
    std::size_t iterations = 0;
    double gamma = 0.0;
};

struct TrainedModel {
    ModelParams params;
    std::vector<MetricsRecord> metrics;
    /// Filled by ASHR only.
    std::vector<StageRecord> stages;
};

/// State handed to the evaluation observer. `probabilities` is the sampling
/// distribution over `data`, which is the training set or, for ASHR, the
/// current stage subset.
struct EvalPoint {
    std::size_t iteration;
    const ModelParams& params;
    const Dataset& data;
    std::span<const double> probabilities;
};

struct TrainOptions {
    const Dataset* test = nullptr;
    std::optional<ModelParams> initial;
    std::function<void(const EvalPoint&)> on_eval;
    /// Called with the global ids drawn at each iteration.
    std::function<void(std::size_t iteration, std::span<const std::size_t> ids)> on_batch;
};

/// Deterministic starting point for (model config, dataset, loss, seed).
ModelParams initial_params(const ModelConfig& model, const Dataset& data, const LossSpec& loss, std::uint64_t seed);

/// Importance weight 1 / (n p).
double importance_weight(std::size_t n, double p);
/// grad / (n p). Throws on p <= 0.
ModelParams reweight(const ModelParams& grad, std::size_t n, double p);

/// params - eta * reg_gradient - eta * avg_gradient. Throws NumericError if
/// the result is not finite.
ModelParams sgd_step(const ModelParams& params, const ModelParams& avg_gradient, const ModelParams& reg_gradient,
                     double eta);

TrainedModel train_mbsgd(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});
TrainedModel train_optimal(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});
TrainedModel train_assgd(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});
TrainedModel train_ashr(const Dataset& data, const TrainConfig& config, const StageConfig& stage,
                        const TrainOptions& options = {});

/// Dispatches on config.algorithm (ASHR uses config.stage).
TrainedModel train(const Dataset& data, const TrainConfig& config, const TrainOptions& options = {});

}  // namespace assgd
