#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace assgd {

class Rng;

/// Maps a uniform variate in [0, 1) to an id in [0, n).
inline std::size_t uniform_index(double u, std::size_t n) {
    auto i = static_cast<std::size_t>(u * static_cast<double>(n));
    return i < n ? i : n - 1;
}

/// Dynamic weighted sampler over n ids with a uniform smoothing floor:
///
///   p_i = beta / n + (1 - beta) * w_i / sum_j w_j      (uniform when all w = 0)
///
/// Backed by a Fenwick tree, so sampling and single-weight updates are
/// O(log n). The tree and total are rebuilt from scratch every n updates.
class WeightIndex {
public:
    WeightIndex(std::vector<double> weights, double beta);

    std::size_t size() const noexcept { return weights_.size(); }
    double beta() const noexcept { return beta_; }
    double total() const noexcept { return positive_ ? total_ : 0.0; }
    double weight(std::size_t id) const { return weights_.at(id); }
    std::span<const double> weights() const noexcept { return weights_; }

    /// n * p_i; computed directly so that beta = 1 gives exactly 1.
    double scaled_probability(std::size_t id) const;
    double probability(std::size_t id) const;
    std::vector<double> probabilities() const;
    /// Unbiasing weight 1 / (n p_i); never exceeds 1 / beta.
    double importance_weight(std::size_t id) const { return 1.0 / scaled_probability(id); }

    /// One variate per draw: u < beta picks uniformly using u / beta,
    /// otherwise (u - beta) / (1 - beta) walks the prefix sums.
    std::size_t sample_with(double u) const;
    std::size_t sample(Rng& rng) const;
    /// b independent draws with replacement.
    std::vector<std::size_t> draw_batch(std::size_t b, Rng& rng) const;

    /// Smallest id whose inclusive prefix sum exceeds `target`, restricted to
    /// ids with positive weight. Requires total() > 0.
    std::size_t locate(double target) const;

    void update(std::size_t id, double new_weight);
    /// Rebuilds prefix sums and total from the stored weights.
    void recompute();

private:
    void add(std::size_t id, double delta);

    std::vector<double> weights_;
    std::vector<double> tree_;  // 1-based Fenwick array
    double total_ = 0.0;
    double beta_;
    std::size_t positive_ = 0;
    std::size_t updates_since_rebuild_ = 0;
    std::size_t top_bit_ = 0;
};

/// Writes `id,weight,probability` rows with a header.
void write_weights_csv(std::ostream& out, const WeightIndex& index);

/// Last-visit bookkeeping for the interval statistic.
class HistoryStore {
public:
    explicit HistoryStore(std::size_t n) : last_visit_(n, -1) {}

    void set_iteration(std::int64_t t) { current_ = t; }
    std::int64_t current_iteration() const noexcept { return current_; }
    void visit(std::size_t id) { last_visit_.at(id) = current_; }
    std::int64_t last_visit(std::size_t id) const { return last_visit_.at(id); }
    std::size_t size() const noexcept { return last_visit_.size(); }

    /// Iterations since the last visit; current + 1 for never-visited ids.
    std::int64_t interval(std::size_t id) const;

private:
    std::vector<std::int64_t> last_visit_;
    std::int64_t current_ = 0;
};

/// m distinct ids drawn uniformly without replacement from [0, n), sorted.
/// m == n returns 0..n-1 without consuming the stream.
std::vector<std::size_t> stage_subset(std::size_t n, std::size_t m, Rng& rng);

}  // namespace assgd
