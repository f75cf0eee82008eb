#include "assgd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "assgd/error.hpp"
#include "assgd/random.hpp"

namespace assgd {

namespace {

void check_weight(double w) {
    if (!std::isfinite(w) || w < 0.0) throw ArgumentError("sampling weights must be finite and non-negative");
}

}  // namespace

WeightIndex::WeightIndex(std::vector<double> weights, double beta) : weights_(std::move(weights)), beta_(beta) {
    if (weights_.empty()) throw ArgumentError("weight index needs at least one id");
    if (!(beta_ >= 0.0 && beta_ <= 1.0)) throw ArgumentError("beta must lie in [0, 1]");
    for (double w : weights_) check_weight(w);
    top_bit_ = 1;
    while (top_bit_ * 2 <= weights_.size()) top_bit_ *= 2;
    recompute();
}

void WeightIndex::recompute() {
    const std::size_t n = weights_.size();
    tree_.assign(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) {
        tree_[i] += weights_[i - 1];
        const std::size_t j = i + (i & (~i + 1));
        if (j <= n) tree_[j] += tree_[i];
    }
    total_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    positive_ = static_cast<std::size_t>(std::count_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; }));
    updates_since_rebuild_ = 0;
}

void WeightIndex::add(std::size_t id, double delta) {
    for (std::size_t i = id + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
}

void WeightIndex::update(std::size_t id, double new_weight) {
    if (id >= weights_.size()) throw ArgumentError("weight index: id out of range");
    check_weight(new_weight);
    const double old = weights_[id];
    if (old > 0.0) --positive_;
    if (new_weight > 0.0) ++positive_;
    weights_[id] = new_weight;
    add(id, new_weight - old);
    total_ += new_weight - old;
    if (++updates_since_rebuild_ >= weights_.size() || (positive_ > 0 && !(total_ > 0.0))) recompute();
}

double WeightIndex::scaled_probability(std::size_t id) const {
    const double w = weights_.at(id);
    if (positive_ == 0) return 1.0;
    const double n = static_cast<double>(weights_.size());
    return beta_ + (1.0 - beta_) * (n * w / total_);
}

double WeightIndex::probability(std::size_t id) const {
    return scaled_probability(id) / static_cast<double>(weights_.size());
}

std::vector<double> WeightIndex::probabilities() const {
    std::vector<double> p(weights_.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = probability(i);
    return p;
}

std::size_t WeightIndex::locate(double target) const {
    const std::size_t n = weights_.size();
    std::size_t pos = 0;
    double remaining = target;
    for (std::size_t step = top_bit_; step > 0; step >>= 1) {
        if (pos + step <= n && tree_[pos + step] <= remaining) {
            pos += step;
            remaining -= tree_[pos];
        }
    }
    // Rounding in the partial sums can land past the end or on a zero weight.
    if (pos >= n) pos = n - 1;
    if (weights_[pos] > 0.0) return pos;
    for (std::size_t i = pos + 1; i < n; ++i)
        if (weights_[i] > 0.0) return i;
    for (std::size_t i = pos; i-- > 0;)
        if (weights_[i] > 0.0) return i;
    return pos;
}

std::size_t WeightIndex::sample_with(double u) const {
    const std::size_t n = weights_.size();
    if (positive_ == 0) return uniform_index(u, n);
    if (u < beta_) return uniform_index(u / beta_, n);
    const double v = (u - beta_) / (1.0 - beta_);
    return locate(v * total_);
}

std::size_t WeightIndex::sample(Rng& rng) const { return sample_with(rng.uniform()); }

std::vector<std::size_t> WeightIndex::draw_batch(std::size_t b, Rng& rng) const {
    if (b == 0) throw ArgumentError("batch size must be at least 1");
    std::vector<std::size_t> ids(b);
    for (auto& id : ids) id = sample(rng);
    return ids;
}

void write_weights_csv(std::ostream& out, const WeightIndex& index) {
    out << "id,weight,probability\n";
    const auto old = out.precision(17);
    for (std::size_t i = 0; i < index.size(); ++i)
        out << i << ',' << index.weight(i) << ',' << index.probability(i) << '\n';
    out.precision(old);
}

std::int64_t HistoryStore::interval(std::size_t id) const {
    const auto last = last_visit_.at(id);
    return last < 0 ? current_ + 1 : current_ - last;
}

std::vector<std::size_t> stage_subset(std::size_t n, std::size_t m, Rng& rng) {
    if (m == 0 || m > n) throw ArgumentError("stage subset size must lie in [1, n]");
    std::vector<std::size_t> out;
    if (m == n) {
        out.resize(n);
        std::iota(out.begin(), out.end(), std::size_t{0});
        return out;
    }
    // Floyd's selection: each m-subset is equally likely.
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(m * 2);
    for (std::size_t j = n - m; j < n; ++j) {
        const std::size_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    out.assign(chosen.begin(), chosen.end());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace assgd
