#include "assgd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "assgd/error.hpp"
#include "assgd/random.hpp"
#include "assgd/sampler.hpp"

namespace assgd {

namespace {

constexpr std::size_t kChunk = 256;

template <class F>
void for_each_chunk(const Dataset& data, F&& f) {
    std::vector<WeightedInstance> batch;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        const std::size_t end = std::min(data.size(), start + kChunk);
        batch.clear();
        for (std::size_t i = start; i < end; ++i) batch.push_back({&data[i], 1.0});
        f(start, std::span<const WeightedInstance>(batch));
    }
}

void check_distribution(std::span<const double> probs, std::size_t n) {
    if (probs.size() != n) throw ArgumentError("distribution length does not match dataset size");
    double s = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ArgumentError("probabilities must be finite and non-negative");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw ArgumentError("probabilities must sum to 1");
}

}  // namespace

ModelParams full_gradient(const ModelParams& params, const Dataset& data, const LossSpec& spec) {
    ModelParams g = params.zeros_like();
    const double n = static_cast<double>(data.size());
    for_each_chunk(data, [&](std::size_t, std::span<const WeightedInstance> batch) {
        auto r = batch_backward(params, batch, spec, {.per_sample_norms = false});
        g.axpy(static_cast<double>(batch.size()) / n, r.avg_gradient);
    });
    if (!g.all_finite()) throw NumericError("full gradient overflowed");
    return g;
}

std::vector<double> per_instance_grad_norms(const ModelParams& params, const Dataset& data, const LossSpec& spec) {
    std::vector<double> norms(data.size());
    for_each_chunk(data, [&](std::size_t start, std::span<const WeightedInstance> batch) {
        auto r = batch_backward(params, batch, spec);
        std::copy(r.per_sample_grad_norms.begin(), r.per_sample_grad_norms.end(),
                  norms.begin() + static_cast<std::ptrdiff_t>(start));
    });
    return norms;
}

double mean_loss(const ModelParams& params, const Dataset& data, const LossSpec& spec) {
    double s = 0.0;
    for (const auto& x : data.instances()) s += loss(params, x, spec);
    return s / static_cast<double>(data.size());
}

double classification_error(const ModelParams& params, const Dataset& data) {
    std::size_t wrong = 0;
    for (const auto& x : data.instances()) {
        const auto f = predict(params, x.features);
        if (f.size() == 1) {
            const int guess = f[0] >= 0.0 ? 1 : -1;
            if (data.is_binary() ? guess != x.label : std::lround(f[0]) != x.label) ++wrong;
        } else {
            Eigen::Index arg = 0;
            f.maxCoeff(&arg);
            if (arg != x.label) ++wrong;
        }
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

std::vector<double> optimal_distribution(std::span<const double> grad_norms) {
    if (grad_norms.empty()) throw ArgumentError("optimal distribution needs at least one norm");
    double total = 0.0;
    for (double g : grad_norms) {
        if (!(g >= 0.0) || !std::isfinite(g)) throw ArgumentError("gradient norms must be finite and non-negative");
        total += g;
    }
    std::vector<double> p(grad_norms.size());
    if (total == 0.0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = grad_norms[i] / total;
    return p;
}

Eigen::MatrixXd per_instance_gradients(const ModelParams& params, const Dataset& data, const LossSpec& spec) {
    Eigen::MatrixXd g(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(params.parameter_count()));
    for (std::size_t i = 0; i < data.size(); ++i)
        g.row(static_cast<Eigen::Index>(i)) = instance_gradient(params, data[i], spec).flatten().transpose();
    return g;
}

double variance_from_gradients(const Eigen::MatrixXd& grads, std::span<const double> probs, std::size_t batch_size) {
    if (batch_size == 0) throw ArgumentError("batch size must be at least 1");
    const auto n = static_cast<std::size_t>(grads.rows());
    check_distribution(probs, n);
    const double nd = static_cast<double>(n);
    const Eigen::VectorXd mean = grads.colwise().mean().transpose();
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = grads.row(static_cast<Eigen::Index>(i)).transpose();
        if (probs[i] == 0.0) {
            if (row.squaredNorm() > 0.0)
                throw ArgumentError("instance " + std::to_string(i) + " has zero probability but a nonzero gradient");
            continue;
        }
        var += probs[i] * (row / (nd * probs[i]) - mean).squaredNorm();
    }
    if (!std::isfinite(var)) throw NumericError("variance overflowed");
    return var / static_cast<double>(batch_size);
}

VarianceReport variance(const ModelParams& params, const Dataset& data, const LossSpec& spec,
                        std::span<const double> probs, std::size_t batch_size, std::string label) {
    check_distribution(probs, data.size());
    const auto grads = per_instance_gradients(params, data, spec);
    const double full_norm = grads.colwise().mean().norm();
    return {full_norm, variance_from_gradients(grads, probs, batch_size), std::move(label), batch_size};
}

double sampled_variance(const ModelParams& params, const Dataset& data, const LossSpec& spec,
                        std::span<const double> probs, std::size_t batch_size, Rng& rng, std::size_t draws) {
    if (batch_size == 0 || draws == 0) throw ArgumentError("batch size and draw count must be positive");
    check_distribution(probs, data.size());
    const Eigen::VectorXd mean = full_gradient(params, data, spec).flatten();
    WeightIndex index(std::vector<double>(probs.begin(), probs.end()), 0.0);
    const double nd = static_cast<double>(data.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < draws; ++k) {
        const auto i = index.sample(rng);
        const Eigen::VectorXd g = instance_gradient(params, data[i], spec).flatten() / (nd * probs[i]);
        acc += (g - mean).squaredNorm();
    }
    return acc / static_cast<double>(draws) / static_cast<double>(batch_size);
}

double uncertainty(const ModelParams& params, const FeatureVector& x, const LossSpec& spec) {
    if (spec.loss != LossKind::logistic) throw UnsupportedError("uncertainty is defined for logistic models only");
    const auto f = predict(params, x);
    if (f.size() != 1) throw UnsupportedError("uncertainty needs a scalar-output model");
    const double pos = activate(Activation::sigmoid, f[0]);
    const double neg = activate(Activation::sigmoid, -f[0]);
    double h = 0.0;
    if (pos > 0.0) h -= pos * std::log(pos);
    if (neg > 0.0) h -= neg * std::log(neg);
    return h;
}

double significance(const ModelParams& params, const FeatureVector& x) {
    return std::sqrt(output_gradient(params, x).squared_norm());
}

double info_gain(double uncertainty, double significance, std::int64_t interval) {
    if (uncertainty < 0.0 || significance < 0.0 || interval < 0)
        throw ArgumentError("information gain factors must be non-negative");
    return uncertainty * significance * static_cast<double>(interval);
}

InfoGainRecord info_gain_record(const ModelParams& params, const FeatureVector& x, const LossSpec& spec,
                                std::int64_t interval) {
    InfoGainRecord r;
    r.uncertainty = uncertainty(params, x, spec);
    r.significance = significance(params, x);
    r.interval = interval;
    r.info_gain = info_gain(r.uncertainty, r.significance, interval);
    return r;
}

double expected_grad_norm(const ModelParams& params, const FeatureVector& x, const LossSpec& spec) {
    if (spec.loss != LossKind::logistic) throw UnsupportedError("expected gradient norm needs a logistic model");
    const auto f = predict(params, x);
    if (f.size() != 1) throw UnsupportedError("expected gradient norm needs a scalar-output model");
    const double s = significance(params, x);
    double e = 0.0;
    for (int y : {1, -1}) {
        const double p = activate(Activation::sigmoid, f[0] * y);
        const double dl = std::abs(loss_derivative(LossKind::logistic, f, y)[0]);
        e += p * dl * s;
    }
    return e;
}

double finite_diff_check(const ModelParams& params, const Instance& instance, const LossSpec& spec, double h_scale) {
    ModelParams analytic = instance_gradient(params, instance, spec);
    analytic.axpy(1.0, regularizer_gradient(params, spec));
    const Eigen::VectorXd a = analytic.flatten();
    const Eigen::VectorXd w0 = params.flatten();

    ModelParams probe = params;
    auto objective = [&](const Eigen::VectorXd& w) {
        probe.assign_flat(w);
        return loss(probe, instance, spec) + regularizer_value(probe, spec);
    };
    double worst = 0.0;
    Eigen::VectorXd w = w0;
    for (Eigen::Index k = 0; k < w0.size(); ++k) {
        const double h = h_scale * std::max(1.0, std::abs(w0[k]));
        w[k] = w0[k] + h;
        const double up = objective(w);
        w[k] = w0[k] - h;
        const double down = objective(w);
        w[k] = w0[k];
        const double central = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(a[k] - central) / std::max(1.0, std::abs(central)));
    }
    return worst;
}

}  // namespace assgd
