#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "assgd/dataset.hpp"
#include "assgd/model.hpp"

namespace assgd {

class Rng;

struct CheckResult {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    /// Inputs needed to reproduce a failure.
    std::string detail;
};

/// One finite-difference fixture: small params and an instance kept at least
/// 1e-3 away from hinge margins, relu kinks and zero l1 coordinates.
struct GradCase {
    ModelParams params;
    Instance instance;
    LossSpec spec;
};

/// `mlp_activation` empty selects a linear model.
GradCase make_grad_case(Rng& rng, LossKind loss, std::optional<Activation> mlp_activation,
                        RegularizerKind regularizer);

/// Pearson statistic of observed counts against expected probabilities.
double chi_square_statistic(std::span<const std::size_t> counts, std::span<const double> probs);
/// Upper critical value of the chi-square distribution at `alpha`.
double chi_square_critical(std::size_t dof, double alpha);

/// Finite-difference suite over every loss/model/regularizer combination.
std::vector<CheckResult> check_gradients(std::uint64_t seed = 1);
/// Variance-optimality suite: optimal distribution vs uniform and random
/// distributions, closed form, equal-magnitude property.
std::vector<CheckResult> check_variance(std::uint64_t seed = 1, std::size_t configs = 20,
                                        std::size_t distributions = 1000);
/// Chi-square frequency suite for the weighted sampler.
std::vector<CheckResult> check_sampler(std::uint64_t seed = 1, std::size_t vectors = 6,
                                       std::size_t draws = 1000000);

/// Prints one line per result; returns true when all passed.
bool report(std::ostream& out, std::span<const CheckResult> results);

}  // namespace assgd
