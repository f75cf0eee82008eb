#include "assgd/metrics.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "assgd/error.hpp"

namespace assgd {

std::string format_double(double v) {
    std::array<char, 32> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), p);
}

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const MetricsRecord& r) {
    out << r.iteration << ',' << format_double(r.wall_time_ms) << ',' << format_double(r.train_loss) << ','
        << format_double(r.test_error) << ',';
    if (r.variance_estimate) out << format_double(*r.variance_estimate);
    out << ',' << r.algorithm << ',' << r.seed << '\n';
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows) {
    write_metrics_header(out);
    for (const auto& r : rows) write_metrics_row(out, r);
}

namespace {

template <class T>
T parse_field(const std::string& s, std::size_t line, const char* name) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ParseError(std::string("bad ") + name + " '" + s + "'", line);
    return v;
}

}  // namespace

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader) throw ParseError("unexpected header '" + line + "'", 1);
    std::vector<MetricsRecord> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 7) throw ParseError("expected 7 fields", lineno);
        MetricsRecord r;
        r.iteration = parse_field<std::int64_t>(f[0], lineno, "iteration");
        r.wall_time_ms = parse_field<double>(f[1], lineno, "wall_time_ms");
        r.train_loss = parse_field<double>(f[2], lineno, "train_loss");
        r.test_error = parse_field<double>(f[3], lineno, "test_error");
        if (!f[4].empty()) r.variance_estimate = parse_field<double>(f[4], lineno, "variance_estimate");
        r.algorithm = f[5];
        r.seed = parse_field<std::uint64_t>(f[6], lineno, "seed");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace assgd
