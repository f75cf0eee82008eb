#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace assgd {

/// One evaluation row of a training run.
struct MetricsRecord {
    std::int64_t iteration = 0;
    /// Cumulative training-step time; evaluation and loading excluded.
    double wall_time_ms = 0.0;
    double train_loss = 0.0;
    double test_error = 0.0;
    std::optional<double> variance_estimate;
    std::string algorithm;
    std::uint64_t seed = 0;

    friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

inline constexpr const char* kMetricsHeader =
    "iteration,wall_time_ms,train_loss,test_error,variance_estimate,algorithm,seed";

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRecord& r);
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows);
/// Parses a file produced by write_metrics_csv. Throws ParseError.
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace assgd
