#include "assgd/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "assgd/diagnostics.hpp"

namespace assgd {

std::optional<std::int64_t> iterations_to_target(const std::vector<MetricsRecord>& metrics, double target) {
    for (const auto& r : metrics)
        if (r.train_loss <= target) return r.iteration;
    return std::nullopt;
}

double loss_at_fraction(const std::vector<MetricsRecord>& metrics, std::size_t iterations, double fraction) {
    if (metrics.empty()) throw ArgumentError("no metric rows");
    const double mark = fraction * static_cast<double>(iterations);
    for (const auto& r : metrics)
        if (static_cast<double>(r.iteration) >= mark) return r.train_loss;
    return metrics.back().train_loss;
}

double second_half_mean(const std::vector<double>& values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t start = values.size() / 2;
    return std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(start), values.end(), 0.0) /
           static_cast<double>(values.size() - start);
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

BenchResult run_bench(const RunConfig& config, const Dataset& train, const Dataset* test) {
    if (config.algorithms.size() < 2) throw ConfigError("bench needs at least two algorithms");
    if (config.seeds.empty()) throw ConfigError("bench needs at least one seed");
    const bool has_baseline =
        std::find(config.algorithms.begin(), config.algorithms.end(), Algorithm::mbsgd) != config.algorithms.end();
    if (!config.target_loss && !has_baseline)
        throw ConfigError("bench needs mbsgd in the algorithm list or an explicit target_loss");

    BenchResult out;
    const std::size_t n = train.size();
    const std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    for (auto seed : config.seeds) {
        const ModelParams init = initial_params(config.train.model, train, config.train.loss, seed);
        std::vector<BenchRun> seed_runs;
        // Baseline first so its loss can define the target.
        std::vector<Algorithm> order = config.algorithms;
        std::stable_partition(order.begin(), order.end(), [](Algorithm a) { return a == Algorithm::mbsgd; });
        std::optional<double> target = config.target_loss;
        for (auto alg : order) {
            BenchRun run;
            run.algorithm = alg;
            run.seed = seed;
            TrainConfig tc = config.train;
            tc.algorithm = alg;
            tc.seed = seed;
            TrainOptions opts;
            opts.test = test;
            opts.initial = init;
            opts.on_eval = [&](const EvalPoint& e) {
                const auto full = per_instance_gradients(e.params, train, tc.loss);
                run.uniform_variance.push_back(variance_from_gradients(full, uniform, tc.batch_size));
                if (&e.data == &train) {
                    run.sampler_variance.push_back(variance_from_gradients(full, e.probabilities, tc.batch_size));
                } else {
                    const auto sub = per_instance_gradients(e.params, e.data, tc.loss);
                    run.sampler_variance.push_back(variance_from_gradients(sub, e.probabilities, tc.batch_size));
                }
            };
            run.result = assgd::train(train, tc, opts);
            if (!target) target = loss_at_fraction(run.result.metrics, tc.iterations, config.target_fraction);
            run.mean_iteration_ms = run.result.metrics.back().wall_time_ms / static_cast<double>(tc.iterations);
            run.variance_ratio = alg == Algorithm::mbsgd
                                     ? 1.0
                                     : second_half_mean(run.sampler_variance) / second_half_mean(run.uniform_variance);
            seed_runs.push_back(std::move(run));
        }
        for (auto& r : seed_runs) {
            r.target_loss = *target;
            r.iterations_to_target = iterations_to_target(r.result.metrics, *target);
        }
        // Restore the configured algorithm order.
        for (auto alg : config.algorithms)
            for (auto& r : seed_runs)
                if (r.algorithm == alg) out.runs.push_back(std::move(r));
    }

    for (const auto& r : out.runs) {
        SummaryRow row;
        row.algorithm = std::string(to_string(r.algorithm));
        row.seed = std::to_string(r.seed);
        if (r.iterations_to_target) row.iterations_to_target = static_cast<double>(*r.iterations_to_target);
        row.mean_iteration_ms = r.mean_iteration_ms;
        row.variance_ratio = r.variance_ratio;
        row.target_loss = r.target_loss;
        out.summary.push_back(std::move(row));
    }
    for (auto alg : config.algorithms) {
        std::vector<double> iters, ms, ratio, targets;
        for (const auto& r : out.runs) {
            if (r.algorithm != alg) continue;
            iters.push_back(r.iterations_to_target ? static_cast<double>(*r.iterations_to_target)
                                                   : std::numeric_limits<double>::infinity());
            ms.push_back(r.mean_iteration_ms);
            ratio.push_back(r.variance_ratio);
            targets.push_back(r.target_loss);
        }
        SummaryRow row;
        row.algorithm = std::string(to_string(alg));
        row.seed = "median";
        if (const double m = median(iters); std::isfinite(m)) row.iterations_to_target = m;
        row.mean_iteration_ms = median(ms);
        row.variance_ratio = median(ratio);
        row.target_loss = median(targets);
        out.summary.push_back(std::move(row));
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << kSummaryHeader << '\n';
    for (const auto& r : rows) {
        out << r.algorithm << ',' << r.seed << ',';
        if (r.iterations_to_target) out << format_double(*r.iterations_to_target);
        else out << "unreached";
        out << ',' << format_double(r.mean_iteration_ms) << ',' << format_double(r.variance_ratio) << ','
            << format_double(r.target_loss) << '\n';
    }
}

}  // namespace assgd
