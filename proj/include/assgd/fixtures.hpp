#pragma once

#include <cstddef>
#include <vector>

#include "assgd/dataset.hpp"
#include "assgd/model.hpp"

namespace assgd {

class Rng;

// Random problem generators shared by the check suites and tests.

/// Gaussian features. Binary labels are random signs, multi-class labels
/// uniform in [0, classes). `sparse` keeps roughly a third of the entries.
Dataset random_dataset(Rng& rng, std::size_t n, std::size_t dim, LabelKind kind, std::size_t classes = 2,
                       bool sparse = false);

/// Every entry (weights and biases) uniform in [-scale, scale].
ModelParams random_mlp(Rng& rng, std::span<const std::size_t> widths, Activation hidden, double scale = 1.0,
                       Activation output = Activation::identity);
ModelParams random_linear(Rng& rng, std::size_t dim, std::size_t outputs, double scale = 1.0);

/// Random distribution over n ids with every p_i >= beta / n.
std::vector<double> random_distribution(Rng& rng, std::size_t n, double beta = 0.0);

/// Positive weights with a heavy spread (some near zero, some large).
std::vector<double> random_weights(Rng& rng, std::size_t n);

}  // namespace assgd
