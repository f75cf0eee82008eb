#include "assgd/fixtures.hpp"

#include <cmath>
#include <numeric>

#include "assgd/random.hpp"

namespace assgd {

Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim, LabelKind kind, std::size_t classes, bool sparse) {
    std::vector<Instance> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector f;
        if (sparse) {
            std::vector<std::uint32_t> idx;
            std::vector<double> val;
            for (std::size_t j = 0; j < dim; ++j)
                if (rng.uniform() < 0.35) {
                    idx.push_back(static_cast<std::uint32_t>(j));
                    val.push_back(rng.normal());
                }
            f = FeatureVector::sparse(std::move(idx), std::move(val));
        } else {
            std::vector<double> v(dim);
            for (auto& x : v) x = rng.normal();
            f = FeatureVector::dense(std::move(v));
        }
        const int label = kind == LabelKind::binary ? (rng.uniform() < 0.5 ? -1 : 1)
                                                    : static_cast<int>(rng.below(classes));
        out.push_back({std::move(f), label});
    }
    return Dataset(std::move(out), dim, kind, classes);
}

ModelParams random_mlp(Rng& rng, std::span<const std::size_t> widths, Activation hidden, double scale,
                       Activation output) {
    auto p = ModelParams::mlp(widths, hidden, output);
    auto flat = p.flatten();
    for (Eigen::Index k = 0; k < flat.size(); ++k) flat[k] = scale * (2.0 * rng.uniform() - 1.0);
    p.assign_flat(flat);
    return p;
}

ModelParams random_linear(Rng& rng, std::size_t dim, std::size_t outputs, double scale) {
    auto p = ModelParams::linear(dim, outputs);
    auto flat = p.flatten();
    for (Eigen::Index k = 0; k < flat.size(); ++k) flat[k] = scale * (2.0 * rng.uniform() - 1.0);
    p.assign_flat(flat);
    return p;
}

std::vector<double> random_distribution(Rng& rng, std::size_t n, double beta) {
    std::vector<double> raw(n);
    for (auto& r : raw) r = -std::log(1.0 - rng.uniform());  // exponential => flat Dirichlet
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    const double nd = static_cast<double>(n);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = beta / nd + (1.0 - beta) * raw[i] / total;
    return p;
}

std::vector<double> random_weights(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = std::exp(4.0 * rng.normal());
    return w;
}

}  // namespace assgd
