#include "assgd/model.hpp"

#include <algorithm>
#include <cmath>

#include "assgd/error.hpp"
#include "assgd/random.hpp"

namespace assgd {

double activate(Activation a, double z) noexcept {
    switch (a) {
        case Activation::identity: return z;
        case Activation::sigmoid:
            if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
            else {
                const double e = std::exp(z);
                return e / (1.0 + e);
            }
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

double activate_derivative(Activation a, double z) noexcept {
    switch (a) {
        case Activation::identity: return 1.0;
        case Activation::sigmoid: {
            const double s = activate(Activation::sigmoid, z);
            return s * (1.0 - s);
        }
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

ModelParams ModelParams::linear(std::size_t dimension, std::size_t outputs) {
    if (dimension == 0 || outputs == 0) throw ArgumentError("linear model needs positive shape");
    ModelParams p;
    p.kind = ModelKind::linear;
    p.layers.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(outputs), static_cast<Eigen::Index>(dimension)),
                        Eigen::VectorXd(), false, Activation::identity});
    return p;
}

ModelParams ModelParams::mlp(std::span<const std::size_t> widths, Activation hidden, Activation output) {
    if (widths.size() < 2) throw ArgumentError("MLP needs at least input and output widths");
    if (std::any_of(widths.begin(), widths.end(), [](std::size_t w) { return w == 0; }))
        throw ArgumentError("MLP layer widths must be positive");
    ModelParams p;
    p.kind = ModelKind::mlp;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const auto rows = static_cast<Eigen::Index>(widths[k + 1]);
        const auto cols = static_cast<Eigen::Index>(widths[k]);
        p.layers.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows), true,
                            k + 2 == widths.size() ? output : hidden});
    }
    return p;
}

std::size_t ModelParams::input_dim() const { return layers.front().inputs(); }
std::size_t ModelParams::output_dim() const { return layers.back().outputs(); }

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + (l.has_bias ? l.bias.size() : 0));
    return n;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams z = *this;
    for (auto& l : z.layers) {
        l.weight.setZero();
        if (l.has_bias) l.bias.setZero();
    }
    return z;
}

void ModelParams::randomize(Rng& rng, double scale) {
    for (auto& l : layers) {
        const double s = scale * std::sqrt(6.0 / static_cast<double>(l.inputs() + l.outputs()));
        // Row-major fill order keeps the stream layout independent of storage order.
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = s * (2.0 * rng.uniform() - 1.0);
        if (l.has_bias) l.bias.setZero();
    }
}

bool ModelParams::all_finite() const {
    return std::all_of(layers.begin(), layers.end(), [](const Layer& l) {
        return l.weight.allFinite() && (!l.has_bias || l.bias.allFinite());
    });
}

double ModelParams::squared_norm() const {
    double s = 0.0;
    for (const auto& l : layers) {
        s += l.weight.squaredNorm();
        if (l.has_bias) s += l.bias.squaredNorm();
    }
    return s;
}

Eigen::VectorXd ModelParams::flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (const auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) out[k++] = l.weight(r, c);
        if (l.has_bias)
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) out[k++] = l.bias[r];
    }
    return out;
}

void ModelParams::assign_flat(const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != parameter_count())
        throw ArgumentError("flat parameter vector has the wrong length");
    Eigen::Index k = 0;
    for (auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
        if (l.has_bias)
            for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[k++];
    }
}

void ModelParams::check_same_shape(const ModelParams& other) const {
    if (layers.size() != other.layers.size()) throw ArgumentError("parameter layer count mismatch");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& a = layers[k];
        const auto& b = other.layers[k];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.has_bias != b.has_bias ||
            (a.has_bias && a.bias.size() != b.bias.size()))
            throw ArgumentError("parameter shape mismatch in layer " + std::to_string(k));
    }
}

ModelParams& ModelParams::axpy(double a, const ModelParams& other) {
    check_same_shape(other);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].weight.noalias() += a * other.layers[k].weight;
        if (layers[k].has_bias) layers[k].bias.noalias() += a * other.layers[k].bias;
    }
    return *this;
}

ModelParams& ModelParams::scale(double a) {
    for (auto& l : layers) {
        l.weight *= a;
        if (l.has_bias) l.bias *= a;
    }
    return *this;
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "?";
}

std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::squared: return "squared";
        case LossKind::hinge: return "hinge";
        case LossKind::logistic: return "logistic";
        case LossKind::softmax_cross_entropy: return "softmax";
    }
    return "?";
}

std::string_view to_string(RegularizerKind k) {
    switch (k) {
        case RegularizerKind::none: return "none";
        case RegularizerKind::l2: return "l2";
        case RegularizerKind::l1: return "l1";
    }
    return "?";
}

Activation parse_activation(std::string_view s) {
    if (s == "identity") return Activation::identity;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw ArgumentError("unknown activation '" + std::string(s) + "' (identity, sigmoid, tanh, relu)");
}

LossKind parse_loss(std::string_view s) {
    if (s == "squared") return LossKind::squared;
    if (s == "hinge") return LossKind::hinge;
    if (s == "logistic") return LossKind::logistic;
    if (s == "softmax" || s == "softmax_ce" || s == "softmax-cross-entropy") return LossKind::softmax_cross_entropy;
    throw ArgumentError("unknown loss '" + std::string(s) + "' (squared, hinge, logistic, softmax)");
}

RegularizerKind parse_regularizer(std::string_view s) {
    if (s == "none") return RegularizerKind::none;
    if (s == "l2") return RegularizerKind::l2;
    if (s == "l1") return RegularizerKind::l1;
    throw ArgumentError("unknown regularizer '" + std::string(s) + "' (none, l2, l1)");
}

namespace {

void apply_activation(Activation a, const Eigen::MatrixXd& z, Eigen::MatrixXd& h) {
    if (a == Activation::identity) {
        h = z;
        return;
    }
    h = z.unaryExpr([a](double v) { return activate(a, v); });
}

Eigen::VectorXd apply_activation(Activation a, const Eigen::VectorXd& z) {
    return z.unaryExpr([a](double v) { return activate(a, v); });
}

bool is_binary_loss(LossKind k) { return k == LossKind::hinge || k == LossKind::logistic; }

// sigma(-z) without overflow
double sigmoid_neg(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(z));
}

void check_label(LossKind kind, const Eigen::VectorXd& output, int label) {
    if (is_binary_loss(kind)) {
        if (output.size() != 1) throw ArgumentError(std::string(to_string(kind)) + " loss needs a scalar output");
        if (label != 1 && label != -1)
            throw ArgumentError(std::string(to_string(kind)) + " loss needs labels in {-1, +1}");
    } else if (kind == LossKind::squared) {
        if (output.size() != 1) throw ArgumentError("squared loss needs a scalar output");
    } else {
        if (label < 0 || label >= output.size())
            throw ArgumentError("softmax loss: class id " + std::to_string(label) + " out of range");
    }
}

}  // namespace

Eigen::VectorXd predict(const ModelParams& params, const FeatureVector& x) {
    const auto& first = params.layers.front();
    if (x.extent() > first.inputs()) throw ArgumentError("input has more features than the model accepts");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(first.weight.rows());
    x.for_each([&](std::size_t j, double v) { z.noalias() += v * first.weight.col(static_cast<Eigen::Index>(j)); });
    if (first.has_bias) z += first.bias;
    Eigen::VectorXd h = apply_activation(first.activation, z);
    for (std::size_t k = 1; k < params.layers.size(); ++k) {
        const auto& l = params.layers[k];
        z = l.weight * h;
        if (l.has_bias) z += l.bias;
        h = apply_activation(l.activation, z);
    }
    return h;
}

double loss_value(LossKind kind, const Eigen::VectorXd& output, int label) {
    check_label(kind, output, label);
    switch (kind) {
        case LossKind::squared: {
            const double r = static_cast<double>(label) - output[0];
            return r * r;
        }
        case LossKind::hinge: return std::max(0.0, 1.0 - output[0] * label);
        case LossKind::logistic: {
            const double z = output[0] * label;
            return z > 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
        }
        case LossKind::softmax_cross_entropy: {
            const double m = output.maxCoeff();
            const double lse = m + std::log((output.array() - m).exp().sum());
            return lse - output[label];
        }
    }
    return 0.0;
}

Eigen::VectorXd loss_derivative(LossKind kind, const Eigen::VectorXd& output, int label) {
    check_label(kind, output, label);
    Eigen::VectorXd d(output.size());
    switch (kind) {
        case LossKind::squared: d[0] = -2.0 * (static_cast<double>(label) - output[0]); break;
        case LossKind::hinge: d[0] = output[0] * label < 1.0 ? -static_cast<double>(label) : 0.0; break;
        case LossKind::logistic: d[0] = -label * sigmoid_neg(output[0] * label); break;
        case LossKind::softmax_cross_entropy: {
            const double m = output.maxCoeff();
            d = (output.array() - m).exp();
            d /= d.sum();
            d[label] -= 1.0;
            break;
        }
    }
    return d;
}

double loss(const ModelParams& params, const Instance& instance, const LossSpec& spec) {
    return loss_value(spec.loss, predict(params, instance.features), instance.label);
}

double regularizer_value(const ModelParams& params, const LossSpec& spec) {
    if (spec.lambda < 0.0) throw ArgumentError("regularization strength must be non-negative");
    double s = 0.0;
    switch (spec.regularizer) {
        case RegularizerKind::none: return 0.0;
        case RegularizerKind::l2:
            for (const auto& l : params.layers) s += l.weight.squaredNorm();
            break;
        case RegularizerKind::l1:
            for (const auto& l : params.layers) s += l.weight.lpNorm<1>();
            break;
    }
    return spec.lambda * s;
}

ModelParams regularizer_gradient(const ModelParams& params, const LossSpec& spec) {
    if (spec.lambda < 0.0) throw ArgumentError("regularization strength must be non-negative");
    ModelParams g = params.zeros_like();
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        const auto& w = params.layers[k].weight;
        auto& gw = g.layers[k].weight;
        switch (spec.regularizer) {
            case RegularizerKind::none: break;
            case RegularizerKind::l2: gw = 2.0 * spec.lambda * w; break;
            case RegularizerKind::l1:
                gw = w.unaryExpr([&](double v) { return v > 0.0 ? spec.lambda : (v < 0.0 ? -spec.lambda : 0.0); });
                break;
        }
    }
    return g;
}

void accumulate_layer_norms(const Eigen::MatrixXd& dz, const Eigen::MatrixXd& h, double bias_term,
                            std::span<double> out) {
    const Eigen::VectorXd gz = dz.rowwise().squaredNorm();
    const Eigen::VectorXd hh = h.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < dz.rows(); ++i) out[static_cast<std::size_t>(i)] += gz[i] * (hh[i] + bias_term);
}

BatchBackwardResult batch_backward(const ModelParams& params, std::span<const WeightedInstance> batch,
                                   const LossSpec& spec, const BackwardOptions& options) {
    if (batch.empty()) throw ArgumentError("batch must not be empty");
    const auto b = static_cast<Eigen::Index>(batch.size());
    const std::size_t n_layers = params.layers.size();
    const auto& first = params.layers.front();
    const auto dim = static_cast<Eigen::Index>(first.inputs());

    Eigen::VectorXd coeff(b);
    bool dense_input = true;
    for (Eigen::Index i = 0; i < b; ++i) {
        const auto& wi = batch[static_cast<std::size_t>(i)];
        if (!(wi.weight > 0.0) || !std::isfinite(wi.weight))
            throw ArgumentError("importance weights must be finite and positive");
        const auto& x = wi.instance->features;
        if (x.extent() > first.inputs()) throw ArgumentError("input has more features than the model accepts");
        if (x.is_sparse()) dense_input = false;
        coeff[i] = wi.weight / static_cast<double>(b);
    }

    // h[k] is the input to layer k, z[k] its pre-activation output.
    std::vector<Eigen::MatrixXd> h(n_layers + 1), z(n_layers);
    if (dense_input) {
        h[0].setZero(b, dim);
        for (Eigen::Index i = 0; i < b; ++i) {
            const auto v = batch[static_cast<std::size_t>(i)].instance->features.values();
            for (std::size_t j = 0; j < v.size(); ++j) h[0](i, static_cast<Eigen::Index>(j)) = v[j];
        }
        z[0].noalias() = h[0] * first.weight.transpose();
    } else {
        z[0].setZero(b, first.weight.rows());
        for (Eigen::Index i = 0; i < b; ++i)
            batch[static_cast<std::size_t>(i)].instance->features.for_each([&](std::size_t j, double v) {
                z[0].row(i).noalias() += v * first.weight.col(static_cast<Eigen::Index>(j)).transpose();
            });
    }
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& layer = params.layers[k];
        if (k > 0) z[k].noalias() = h[k] * layer.weight.transpose();
        if (layer.has_bias) z[k].rowwise() += layer.bias.transpose();
        if (!z[k].allFinite()) throw NumericError("non-finite activation in layer " + std::to_string(k));
        apply_activation(layer.activation, z[k], h[k + 1]);
    }

    BatchBackwardResult out;
    out.per_sample_losses.resize(batch.size());
    const auto& f = h[n_layers];
    Eigen::MatrixXd dh(b, f.cols());
    for (Eigen::Index i = 0; i < b; ++i) {
        const Eigen::VectorXd fi = f.row(i).transpose();
        const int label = batch[static_cast<std::size_t>(i)].instance->label;
        out.per_sample_losses[static_cast<std::size_t>(i)] = loss_value(spec.loss, fi, label);
        dh.row(i) = loss_derivative(spec.loss, fi, label).transpose();
    }

    out.avg_gradient = params.zeros_like();
    std::vector<double> sq(options.per_sample_norms ? batch.size() : 0, 0.0);
    Eigen::MatrixXd dz;
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& layer = params.layers[k];
        auto& grad = out.avg_gradient.layers[k];
        if (layer.activation == Activation::identity) {
            dz = std::move(dh);
        } else {
            const Activation a = layer.activation;
            dz = dh.cwiseProduct(z[k].unaryExpr([a](double v) { return activate_derivative(a, v); }));
        }
        if (!dz.allFinite()) throw NumericError("non-finite gradient in layer " + std::to_string(k));

        const double bias_term = layer.has_bias ? 1.0 : 0.0;
        const bool sparse_layer = (k == 0 && !dense_input);
        if (options.per_sample_norms) {
            if (sparse_layer) {
                for (Eigen::Index i = 0; i < b; ++i)
                    sq[static_cast<std::size_t>(i)] +=
                        dz.row(i).squaredNorm() *
                        (batch[static_cast<std::size_t>(i)].instance->features.squared_norm() + bias_term);
            } else {
                accumulate_layer_norms(dz, h[k], bias_term, sq);
            }
        }

        const Eigen::MatrixXd dzw = coeff.asDiagonal() * dz;
        if (sparse_layer) {
            for (Eigen::Index i = 0; i < b; ++i)
                batch[static_cast<std::size_t>(i)].instance->features.for_each([&](std::size_t j, double v) {
                    grad.weight.col(static_cast<Eigen::Index>(j)).noalias() += v * dzw.row(i).transpose();
                });
        } else {
            grad.weight.noalias() = dzw.transpose() * h[k];
        }
        if (layer.has_bias) grad.bias = dzw.colwise().sum().transpose();
        if (k > 0) dh.noalias() = dz * layer.weight;
    }

    if (options.per_sample_norms) {
        out.per_sample_grad_norms.resize(batch.size());
        std::transform(sq.begin(), sq.end(), out.per_sample_grad_norms.begin(), [](double s) { return std::sqrt(s); });
    }
    return out;
}

namespace {

// Single-instance backprop from dL/df (or df/df) with explicit per-layer
// outer products.
ModelParams backprop_single(const ModelParams& params, const FeatureVector& x, const Eigen::VectorXd* dout,
                            const LossSpec* spec, int label) {
    const std::size_t n_layers = params.layers.size();
    std::vector<Eigen::VectorXd> h(n_layers + 1), z(n_layers);
    const auto dense = x.to_dense(params.input_dim());
    h[0] = Eigen::Map<const Eigen::VectorXd>(dense.data(), static_cast<Eigen::Index>(dense.size()));
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& l = params.layers[k];
        z[k] = l.weight * h[k];
        if (l.has_bias) z[k] += l.bias;
        h[k + 1] = apply_activation(l.activation, z[k]);
    }
    Eigen::VectorXd dh = dout ? *dout : loss_derivative(spec->loss, h[n_layers], label);
    if (dh.size() != h[n_layers].size()) throw ArgumentError("output gradient has the wrong length");

    ModelParams g = params.zeros_like();
    for (std::size_t k = n_layers; k-- > 0;) {
        const auto& l = params.layers[k];
        Eigen::VectorXd dz(dh.size());
        for (Eigen::Index p = 0; p < dz.size(); ++p) dz[p] = activate_derivative(l.activation, z[k][p]) * dh[p];
        Eigen::MatrixXd outer(dz.size(), h[k].size());
        for (Eigen::Index p = 0; p < dz.size(); ++p)
            for (Eigen::Index q = 0; q < h[k].size(); ++q) outer(p, q) = dz[p] * h[k][q];
        g.layers[k].weight = std::move(outer);
        if (l.has_bias) g.layers[k].bias = dz;
        dh = l.weight.transpose() * dz;
    }
    if (!g.all_finite()) throw NumericError("non-finite per-instance gradient");
    return g;
}

}  // namespace

ModelParams instance_gradient(const ModelParams& params, const Instance& instance, const LossSpec& spec) {
    return backprop_single(params, instance.features, nullptr, &spec, instance.label);
}

ModelParams output_gradient(const ModelParams& params, const FeatureVector& x) {
    if (params.output_dim() != 1) throw UnsupportedError("output gradient needs a scalar-output model");
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    return backprop_single(params, x, &one, nullptr, 0);
}

double grad_norm_explicit(const ModelParams& params, const Instance& instance, const LossSpec& spec) {
    const auto flat = instance_gradient(params, instance, spec).flatten();
    double s = 0.0;
    for (Eigen::Index k = 0; k < flat.size(); ++k) s += flat[k] * flat[k];
    if (!std::isfinite(s)) throw NumericError("per-instance gradient norm overflowed");
    return std::sqrt(s);
}

void check_compatible(const ModelParams& params, const Dataset& data, const LossSpec& spec) {
    if (params.input_dim() != data.dimension())
        throw ArgumentError("model input dimension " + std::to_string(params.input_dim()) +
                            " does not match dataset dimension " + std::to_string(data.dimension()));
    const bool binary_loss = is_binary_loss(spec.loss);
    if (binary_loss && (!data.is_binary() || params.output_dim() != 1))
        throw ArgumentError(std::string(to_string(spec.loss)) + " loss needs a binary dataset and scalar output");
    if (spec.loss == LossKind::squared && params.output_dim() != 1)
        throw ArgumentError("squared loss needs a scalar output");
    if (spec.loss == LossKind::softmax_cross_entropy &&
        (data.is_binary() || params.output_dim() != data.num_classes()))
        throw ArgumentError("softmax loss needs a multi-class dataset and one output per class");
    if (spec.lambda < 0.0) throw ArgumentError("regularization strength must be non-negative");
}

}  // namespace assgd
