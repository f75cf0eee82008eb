#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "assgd/config.hpp"
#include "assgd/engine.hpp"

namespace assgd {

/// First evaluated iteration whose train loss is <= target.
std::optional<std::int64_t> iterations_to_target(const std::vector<MetricsRecord>& metrics, double target);

/// Train loss of the first row at or after fraction * iterations.
double loss_at_fraction(const std::vector<MetricsRecord>& metrics, std::size_t iterations, double fraction);

/// Mean of the second half of a series.
double second_half_mean(const std::vector<double>& values);

struct BenchRun {
    Algorithm algorithm;
    std::uint64_t seed = 0;
    TrainedModel result;
    double target_loss = 0.0;
    std::optional<std::int64_t> iterations_to_target;
    double mean_iteration_ms = 0.0;
    /// Exact variance of the algorithm's sampler over the exact variance of
    /// uniform sampling at the same parameters, second half of the run.
    double variance_ratio = 1.0;
    std::vector<double> sampler_variance;
    std::vector<double> uniform_variance;
};

struct SummaryRow {
    std::string algorithm;
    std::string seed;  // "median" for aggregate rows
    std::optional<double> iterations_to_target;
    double mean_iteration_ms = 0.0;
    double variance_ratio = 1.0;
    double target_loss = 0.0;
};

struct BenchResult {
    std::vector<BenchRun> runs;
    std::vector<SummaryRow> summary;
};

/// Runs every (algorithm, seed) pair on the same data with the same initial
/// parameters per seed. Requires at least two algorithms and one seed.
BenchResult run_bench(const RunConfig& config, const Dataset& train, const Dataset* test = nullptr);

inline constexpr const char* kSummaryHeader =
    "algorithm,seed,iterations_to_target,mean_iteration_ms,variance_ratio,target_loss";
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace assgd
