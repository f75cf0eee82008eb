#include "assgd/checks.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "assgd/diagnostics.hpp"
#include "assgd/error.hpp"
#include "assgd/fixtures.hpp"
#include "assgd/random.hpp"
#include "assgd/sampler.hpp"

namespace assgd {

namespace {

constexpr double kKinkMargin = 1e-3;

bool away_from_kinks(const GradCase& c) {
    const auto& layers = c.params.layers;
    const auto x = c.instance.features.to_dense(c.params.input_dim());
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    for (const auto& l : layers) {
        Eigen::VectorXd z = l.weight * h;
        if (l.has_bias) z += l.bias;
        if (l.activation == Activation::relu && (z.array().abs() < kKinkMargin).any()) return false;
        h = z.unaryExpr([&](double v) { return activate(l.activation, v); });
        if (c.spec.regularizer == RegularizerKind::l1 && (l.weight.array().abs() < kKinkMargin).any()) return false;
    }
    if (c.spec.loss == LossKind::hinge && std::abs(1.0 - h[0] * c.instance.label) < kKinkMargin) return false;
    return true;
}

std::string describe(const GradCase& c) {
    std::ostringstream os;
    os.precision(17);
    os << "loss=" << to_string(c.spec.loss) << " reg=" << to_string(c.spec.regularizer) << " lambda=" << c.spec.lambda
       << " label=" << c.instance.label << " x=[";
    c.instance.features.for_each([&](std::size_t j, double v) { os << j << ':' << v << ' '; });
    os << "] params=[" << c.params.flatten().transpose() << "]";
    return os.str();
}

}  // namespace

GradCase make_grad_case(Rng& rng, LossKind loss, std::optional<Activation> mlp_activation,
                        RegularizerKind regularizer) {
    const bool softmax = loss == LossKind::softmax_cross_entropy;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const std::size_t dim = 1 + rng.below(8);
        const std::size_t outputs = softmax ? 2 + rng.below(4) : 1;
        GradCase c;
        c.spec = {loss, regularizer, regularizer == RegularizerKind::none ? 0.0 : 0.05 + 0.5 * rng.uniform()};
        if (mlp_activation) {
            std::vector<std::size_t> widths{dim};
            const std::size_t depth = 1 + rng.below(2);
            for (std::size_t k = 0; k < depth; ++k) widths.push_back(1 + rng.below(8));
            widths.push_back(outputs);
            c.params = random_mlp(rng, widths, *mlp_activation, 1.0);
        } else {
            c.params = random_linear(rng, dim, outputs, 1.0);
        }
        std::vector<double> x(dim);
        for (auto& v : x) v = rng.normal();
        c.instance.features = FeatureVector::dense(std::move(x));
        c.instance.label = softmax ? static_cast<int>(rng.below(outputs)) : (rng.uniform() < 0.5 ? -1 : 1);
        if (away_from_kinks(c)) return c;
    }
    throw Error("could not draw a kink-free gradient fixture");
}

double chi_square_statistic(std::span<const std::size_t> counts, std::span<const double> probs) {
    const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (probs[i] <= 0.0) {
            if (counts[i] > 0) return std::numeric_limits<double>::infinity();
            continue;
        }
        const double expected = total * probs[i];
        const double d = static_cast<double>(counts[i]) - expected;
        stat += d * d / expected;
    }
    return stat;
}

double chi_square_critical(std::size_t dof, double alpha) {
    boost::math::chi_squared dist(static_cast<double>(dof));
    return boost::math::quantile(boost::math::complement(dist, alpha));
}

std::vector<CheckResult> check_gradients(std::uint64_t seed) {
    constexpr double kTol = 1e-5;
    Rng rng(seed);
    std::vector<CheckResult> out;
    const LossKind losses[] = {LossKind::squared, LossKind::logistic, LossKind::hinge, LossKind::softmax_cross_entropy};
    const std::optional<Activation> models[] = {std::nullopt, Activation::sigmoid, Activation::tanh, Activation::relu};
    const RegularizerKind regs[] = {RegularizerKind::none, RegularizerKind::l2, RegularizerKind::l1};
    for (auto loss : losses)
        for (const auto& model : models)
            for (auto reg : regs) {
                CheckResult r;
                r.name = "grad " + std::string(to_string(loss)) + "/" +
                         (model ? "mlp-" + std::string(to_string(*model)) : std::string("linear")) + "/" +
                         std::string(to_string(reg));
                r.tolerance = kTol;
                for (int rep = 0; rep < 5; ++rep) {
                    auto c = make_grad_case(rng, loss, model, reg);
                    const double err = finite_diff_check(c.params, c.instance, c.spec);
                    if (err > r.measured || !std::isfinite(err)) {
                        r.measured = err;
                        r.detail = describe(c);
                    }
                }
                r.passed = r.measured < kTol;
                if (r.passed) r.detail.clear();
                out.push_back(std::move(r));
            }
    return out;
}

std::vector<CheckResult> check_variance(std::uint64_t seed, std::size_t configs, std::size_t distributions) {
    constexpr double kRelTol = 1e-10;
    Rng rng(seed);
    CheckResult optimal{"variance optimal <= uniform and random", 0.0, 0.0, true, {}};
    CheckResult closed{"variance closed form (rel err)", 0.0, kRelTol, true, {}};
    CheckResult equal{"equal re-weighted magnitude (rel err)", 0.0, kRelTol, true, {}};
    for (std::size_t c = 0; c < configs; ++c) {
        const std::size_t n = 2 + rng.below(49);
        const std::size_t dim = 1 + rng.below(6);
        const auto data = random_dataset(rng, n, dim, LabelKind::binary);
        const auto params = random_linear(rng, dim, 1, 1.0);
        const LossSpec spec{LossKind::logistic};
        const auto grads = per_instance_gradients(params, data, spec);
        std::vector<double> norms(n);
        for (std::size_t i = 0; i < n; ++i) norms[i] = grads.row(static_cast<Eigen::Index>(i)).norm();
        const auto p_opt = optimal_distribution(norms);
        const double v_opt = variance_from_gradients(grads, p_opt);

        const double nd = static_cast<double>(n);
        const double mean_norm = std::accumulate(norms.begin(), norms.end(), 0.0) / nd;
        const double full_sq = grads.colwise().mean().squaredNorm();
        const double closed_form = mean_norm * mean_norm - full_sq;
        const double rel = std::abs(v_opt - closed_form) / std::max(std::abs(closed_form), 1e-300);
        if (rel > closed.measured) closed.measured = rel;

        for (std::size_t i = 0; i < n; ++i) {
            if (p_opt[i] == 0.0) continue;
            const double mag = norms[i] / (nd * p_opt[i]);
            equal.measured = std::max(equal.measured, std::abs(mag - mean_norm) / mean_norm);
        }

        const std::vector<double> uniform(n, 1.0 / nd);
        double slack = -std::numeric_limits<double>::infinity();
        auto compare = [&](std::span<const double> q) {
            const double v = variance_from_gradients(grads, q);
            // Positive slack means the optimum lost.
            slack = std::max(slack, (v_opt - v) / std::max(1.0, std::abs(v)));
        };
        compare(uniform);
        for (std::size_t k = 0; k < distributions; ++k) compare(random_distribution(rng, n));
        if (slack > 1e-12) {
            optimal.passed = false;
            optimal.detail = "config " + std::to_string(c) + " n=" + std::to_string(n);
        }
        optimal.measured = std::max(optimal.measured, slack);
    }
    closed.passed = closed.measured < kRelTol;
    equal.passed = equal.measured < kRelTol;
    optimal.tolerance = 1e-12;
    return {optimal, closed, equal};
}

std::vector<CheckResult> check_sampler(std::uint64_t seed, std::size_t vectors, std::size_t draws) {
    constexpr double kAlpha = 1e-3;
    Rng rng(seed);
    std::vector<CheckResult> out;
    const double betas[] = {0.0, 0.1, 0.5};
    for (std::size_t v = 0; v < vectors; ++v) {
        const std::size_t n = 2 + rng.below(63);
        const double beta = betas[v % 3];
        WeightIndex index(random_weights(rng, n), beta);
        const auto probs = index.probabilities();
        std::vector<std::size_t> counts(n, 0);
        for (std::size_t k = 0; k < draws; ++k) ++counts[index.sample(rng)];
        const auto dof = static_cast<std::size_t>(std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0; })) - 1;
        CheckResult r;
        std::ostringstream name;
        name << "sampler chi-square n=" << n << " beta=" << beta;
        r.name = name.str();
        r.measured = chi_square_statistic(counts, probs);
        r.tolerance = chi_square_critical(std::max<std::size_t>(dof, 1), kAlpha);
        r.passed = r.measured <= r.tolerance;
        if (!r.passed) r.detail = "seed=" + std::to_string(seed) + " vector=" + std::to_string(v);
        out.push_back(std::move(r));

        CheckResult floor{"sampler floor p_i >= beta/n n=" + std::to_string(n), 0.0, 0.0, true, {}};
        for (std::size_t i = 0; i < n; ++i)
            if (!(probs[i] >= beta / static_cast<double>(n))) {
                floor.passed = false;
                floor.measured = std::max(floor.measured, beta / static_cast<double>(n) - probs[i]);
            }
        out.push_back(std::move(floor));
    }
    return out;
}

bool report(std::ostream& out, std::span<const CheckResult> results) {
    bool all = true;
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << "  measured=" << r.measured << " tolerance=" << r.tolerance
            << '\n';
        if (!r.passed && !r.detail.empty()) out << "     reproduce: " << r.detail << '\n';
        all = all && r.passed;
    }
    return all;
}

}  // namespace assgd
