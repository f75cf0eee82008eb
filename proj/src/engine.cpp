#include "assgd/engine.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "assgd/diagnostics.hpp"
#include "assgd/error.hpp"
#include "assgd/random.hpp"
#include "assgd/sampler.hpp"

namespace assgd {

std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::mbsgd: return "mbsgd";
        case Algorithm::optimal: return "optimal";
        case Algorithm::assgd: return "assgd";
        case Algorithm::ashr: return "ashr";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view s) {
    if (s == "mbsgd") return Algorithm::mbsgd;
    if (s == "optimal") return Algorithm::optimal;
    if (s == "assgd") return Algorithm::assgd;
    if (s == "ashr") return Algorithm::ashr;
    throw ArgumentError("unknown algorithm '" + std::string(s) + "' (mbsgd, optimal, assgd, ashr)");
}

void TrainConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("eta must be positive");
    if (!(lr_decay >= 0.0) || !std::isfinite(lr_decay)) throw ArgumentError("lr_decay must be non-negative");
    if (batch_size == 0) throw ArgumentError("batch_size must be at least 1");
    if (iterations == 0) throw ArgumentError("iterations must be at least 1");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ArgumentError("beta must lie in [0, 1]");
    if (eval_every == 0) throw ArgumentError("eval_every must be at least 1");
    if (!(loss.lambda >= 0.0) || !std::isfinite(loss.lambda)) throw ArgumentError("lambda must be non-negative");
    if (!(initial_weight >= 0.0) || !std::isfinite(initial_weight))
        throw ArgumentError("initial_weight must be non-negative");
    if (variance == VarianceTracking::sampled && variance_draws == 0)
        throw ArgumentError("variance_draws must be positive");
    if (!(stage.gamma >= 0.0) || !std::isfinite(stage.gamma)) throw ArgumentError("gamma must be non-negative");
    if (!(stage.gamma_growth >= 0.0) || !std::isfinite(stage.gamma_growth))
        throw ArgumentError("gamma_growth must be non-negative");
    if (stage.passes == 0) throw ArgumentError("stage passes must be positive");
    if (model.kind == ModelKind::mlp && model.hidden.empty()) throw ArgumentError("MLP needs at least one hidden layer");
}

StagePlan plan_stages(const StageConfig& stage, std::size_t n, std::size_t batch_size) {
    StagePlan p{};
    p.m = stage.m ? stage.m : (n + 15) / 16;
    if (p.m == 0 || p.m > n) throw ArgumentError("stage subset size must lie in [1, n]");
    p.g = stage.g ? stage.g : (stage.passes * p.m + batch_size - 1) / batch_size;
    if (p.g == 0) p.g = 1;
    return p;
}

ModelParams initial_params(const ModelConfig& model, const Dataset& data, const LossSpec& loss, std::uint64_t seed) {
    const std::size_t outputs = loss.loss == LossKind::softmax_cross_entropy ? data.num_classes() : 1;
    if (model.kind == ModelKind::linear) return ModelParams::linear(data.dimension(), outputs);
    std::vector<std::size_t> widths{data.dimension()};
    widths.insert(widths.end(), model.hidden.begin(), model.hidden.end());
    widths.push_back(outputs);
    auto p = ModelParams::mlp(widths, model.activation, Activation::identity);
    Rng rng(derive_seed(seed, 7));
    p.randomize(rng, model.init_scale);
    return p;
}

double importance_weight(std::size_t n, double p) {
    if (!(p > 0.0)) throw ArgumentError("sampling probability must be positive to re-weight");
    return 1.0 / (static_cast<double>(n) * p);
}

ModelParams reweight(const ModelParams& grad, std::size_t n, double p) {
    ModelParams out = grad;
    out.scale(importance_weight(n, p));
    return out;
}

namespace {

void apply_step(ModelParams& params, const ModelParams& avg_gradient, const ModelParams& reg_gradient, double eta) {
    params.axpy(-eta, reg_gradient);
    params.axpy(-eta, avg_gradient);
}

}  // namespace

ModelParams sgd_step(const ModelParams& params, const ModelParams& avg_gradient, const ModelParams& reg_gradient,
                     double eta) {
    ModelParams out = params;
    apply_step(out, avg_gradient, reg_gradient, eta);
    if (!out.all_finite()) throw NumericError("SGD step produced non-finite parameters");
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

// Shared state of one training run: parameters, sampling stream, timing and
// metric rows.
class Run {
public:
    Run(const Dataset& data, const TrainConfig& config, const TrainOptions& options)
        : data_(data), config_(config), options_(options),
          params(options.initial ? *options.initial
                                 : initial_params(config.model, data, config.loss, config.seed)),
          rng(config.seed), variance_rng_(derive_seed(config.seed, 5)) {
        config.validate();
        check_compatible(params, data, config.loss);
        if (options.test) check_compatible(params, *options.test, config.loss);
    }

    void start() { started_ = Clock::now(); }
    void stop() { elapsed_ms_ += std::chrono::duration<double, std::milli>(Clock::now() - started_).count(); }

    BatchBackwardResult step(std::size_t t, std::span<const std::size_t> ids, std::span<const double> weights,
                             bool norms, const ModelParams* anchor = nullptr, double gamma = 0.0) {
        if (options_.on_batch) options_.on_batch(t, ids);
        batch_.clear();
        for (std::size_t k = 0; k < ids.size(); ++k) batch_.push_back({&data_[ids[k]], weights[k]});
        try {
            auto r = batch_backward(params, batch_, config_.loss, {.per_sample_norms = norms});
            ModelParams reg = regularizer_gradient(params, config_.loss);
            if (anchor && gamma != 0.0) {
                ModelParams diff = params;
                diff.axpy(-1.0, *anchor);
                reg.axpy(gamma, diff);
            }
            apply_step(params, r.avg_gradient, reg, config_.learning_rate(t));
            if (!params.all_finite()) throw NumericError("SGD step produced non-finite parameters");
            for (double v : r.per_sample_grad_norms)
                if (!std::isfinite(v)) throw NumericError("per-sample gradient norm is not finite");
            return r;
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(t) + ": " + e.what());
        }
    }

    bool due(std::size_t t) const { return t % config_.eval_every == 0 || t == config_.iterations; }

    void evaluate(std::size_t t, const Dataset& sample_data, std::span<const double> probs) {
        MetricsRecord r;
        r.iteration = static_cast<std::int64_t>(t);
        r.wall_time_ms = elapsed_ms_;
        r.train_loss = mean_loss(params, data_, config_.loss) + regularizer_value(params, config_.loss);
        if (!std::isfinite(r.train_loss))
            throw NumericError("training diverged at iteration " + std::to_string(t) + " (loss is not finite)");
        r.test_error = classification_error(params, options_.test ? *options_.test : data_);
        if (config_.variance == VarianceTracking::exact)
            r.variance_estimate = variance(params, sample_data, config_.loss, probs, config_.batch_size).variance;
        else if (config_.variance == VarianceTracking::sampled)
            r.variance_estimate = sampled_variance(params, sample_data, config_.loss, probs, config_.batch_size,
                                                   variance_rng_, config_.variance_draws);
        if (r.variance_estimate) last_variance = *r.variance_estimate;
        r.algorithm = std::string(to_string(config_.algorithm));
        r.seed = config_.seed;
        metrics_.push_back(std::move(r));
        if (options_.on_eval) options_.on_eval(EvalPoint{t, params, sample_data, probs});
    }

    TrainedModel finish() { return TrainedModel{std::move(params), std::move(metrics_), {}}; }

    const Dataset& data_;
    const TrainConfig& config_;
    const TrainOptions& options_;
    ModelParams params;
    Rng rng;
    double last_variance = std::numeric_limits<double>::quiet_NaN();

private:
    Rng variance_rng_;
    Clock::time_point started_{};
    double elapsed_ms_ = 0.0;
    std::vector<MetricsRecord> metrics_;
    std::vector<WeightedInstance> batch_;
};

}  // namespace

TrainedModel train_mbsgd(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
    Run run(data, config, options);
    const std::size_t n = data.size();
    const std::size_t b = config.batch_size;
    std::vector<std::size_t> ids(b);
    const std::vector<double> weights(b, 1.0);
    const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    for (std::size_t t = 1; t <= config.iterations; ++t) {
        run.start();
        for (auto& id : ids) id = uniform_index(run.rng.uniform(), n);
        run.step(t, ids, weights, false);
        run.stop();
        if (run.due(t)) run.evaluate(t, data, uniform);
    }
    return run.finish();
}

TrainedModel train_optimal(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
    Run run(data, config, options);
    const std::size_t n = data.size();
    const std::size_t b = config.batch_size;
    std::vector<std::size_t> ids(b);
    std::vector<double> weights(b);
    std::vector<double> probs;
    for (std::size_t t = 1; t <= config.iterations; ++t) {
        run.start();
        auto norms = per_instance_grad_norms(run.params, data, config.loss);
        probs = optimal_distribution(norms);
        const WeightIndex index(probs, 0.0);
        for (std::size_t k = 0; k < b; ++k) {
            ids[k] = index.sample(run.rng);
            weights[k] = importance_weight(n, probs[ids[k]]);
        }
        run.step(t, ids, weights, false);
        run.stop();
        if (run.due(t)) run.evaluate(t, data, probs);
    }
    return run.finish();
}

TrainedModel train_assgd(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
    Run run(data, config, options);
    const std::size_t n = data.size();
    const std::size_t b = config.batch_size;
    WeightIndex index(std::vector<double>(n, config.initial_weight), config.beta);
    HistoryStore history(n);
    std::vector<std::size_t> ids(b);
    std::vector<double> weights(b);
    for (std::size_t t = 1; t <= config.iterations; ++t) {
        run.start();
        history.set_iteration(static_cast<std::int64_t>(t));
        for (std::size_t k = 0; k < b; ++k) {
            ids[k] = index.sample(run.rng);
            weights[k] = index.importance_weight(ids[k]);
        }
        const auto r = run.step(t, ids, weights, true);
        for (std::size_t k = 0; k < b; ++k) {
            index.update(ids[k], r.per_sample_grad_norms[k]);
            history.visit(ids[k]);
        }
        run.stop();
        if (run.due(t)) run.evaluate(t, data, index.probabilities());
    }
    return run.finish();
}

TrainedModel train_ashr(const Dataset& data, const TrainConfig& config, const StageConfig& stage,
                        const TrainOptions& options) {
    Run run(data, config, options);
    const std::size_t n = data.size();
    const std::size_t b = config.batch_size;
    const auto plan = plan_stages(stage, n, b);
    Rng stage_rng(derive_seed(config.seed, 3));

    // Grad[] carried across stages for every instance.
    std::vector<double> grad_store(n, config.initial_weight);
    HistoryStore history(n);
    std::vector<StageRecord> stages;
    std::vector<std::size_t> local(b), ids(b);
    std::vector<double> weights(b);

    std::size_t t = 0;
    for (std::size_t s = 0; t < config.iterations; ++s) {
        StageRecord rec;
        rec.subset = stage_subset(n, plan.m, stage_rng);
        rec.gamma = stage.gamma_policy ? stage.gamma_policy(s, plan.m, run.last_variance)
                                       : stage.gamma * (1.0 + stage.gamma_growth * static_cast<double>(s));
        if (!(rec.gamma >= 0.0) || !std::isfinite(rec.gamma)) throw ArgumentError("gamma policy returned an invalid value");
        rec.iterations = std::min(plan.g, config.iterations - t);

        std::vector<double> local_weights(plan.m);
        for (std::size_t j = 0; j < plan.m; ++j) local_weights[j] = grad_store[rec.subset[j]];
        WeightIndex index(std::move(local_weights), config.beta);
        const ModelParams anchor = run.params;
        std::optional<Dataset> stage_data;

        for (std::size_t it = 0; it < rec.iterations; ++it) {
            ++t;
            run.start();
            history.set_iteration(static_cast<std::int64_t>(t));
            for (std::size_t k = 0; k < b; ++k) {
                local[k] = index.sample(run.rng);
                ids[k] = rec.subset[local[k]];
                weights[k] = index.importance_weight(local[k]);
            }
            const auto r = run.step(t, ids, weights, true, &anchor, rec.gamma);
            for (std::size_t k = 0; k < b; ++k) {
                index.update(local[k], r.per_sample_grad_norms[k]);
                grad_store[ids[k]] = r.per_sample_grad_norms[k];
                history.visit(ids[k]);
            }
            run.stop();
            if (run.due(t)) {
                if (!stage_data) stage_data.emplace(data.subset(rec.subset));
                run.evaluate(t, *stage_data, index.probabilities());
            }
        }
        stages.push_back(std::move(rec));
    }
    auto out = run.finish();
    out.stages = std::move(stages);
    return out;
}

TrainedModel train(const Dataset& data, const TrainConfig& config, const TrainOptions& options) {
    switch (config.algorithm) {
        case Algorithm::mbsgd: return train_mbsgd(data, config, options);
        case Algorithm::optimal: return train_optimal(data, config, options);
        case Algorithm::assgd: return train_assgd(data, config, options);
        case Algorithm::ashr: return train_ashr(data, config, config.stage, options);
    }
    throw ArgumentError("unknown algorithm");
}

}  // namespace assgd
