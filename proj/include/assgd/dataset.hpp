#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace assgd {

/// Either index/value pairs (indices strictly increasing) or a contiguous
/// dense array. Dense vectors have implicit indices 0..size-1.
class FeatureVector {
public:
    FeatureVector() = default;

    static FeatureVector sparse(std::vector<std::uint32_t> indices, std::vector<double> values);
    static FeatureVector dense(std::vector<double> values);

    bool is_sparse() const noexcept { return sparse_; }
    /// Number of stored entries (explicit zeros count).
    std::size_t stored() const noexcept { return values_.size(); }
    std::span<const std::uint32_t> indices() const noexcept { return indices_; }
    std::span<const double> values() const noexcept { return values_; }

    /// One past the largest index present; 0 for an empty vector.
    std::size_t extent() const noexcept;
    double squared_norm() const noexcept;
    double dot(std::span<const double> dense) const noexcept;
    std::vector<double> to_dense(std::size_t dimension) const;

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t k = 0; k < values_.size(); ++k)
            f(sparse_ ? static_cast<std::size_t>(indices_[k]) : k, values_[k]);
    }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

private:
    bool sparse_ = true;
    std::vector<std::uint32_t> indices_;
    std::vector<double> values_;
};

struct Instance {
    FeatureVector features;
    /// {-1, +1} for binary datasets, {0..C-1} for multi-class.
    int label = 0;

    friend bool operator==(const Instance&, const Instance&) = default;
};

enum class LabelKind { binary, multiclass };

/// Immutable training corpus. Instance id is its position.
class Dataset {
public:
    Dataset(std::vector<Instance> instances, std::size_t dimension, LabelKind kind,
            std::size_t num_classes = 2);

    std::size_t size() const noexcept { return instances_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t num_classes() const noexcept { return num_classes_; }
    LabelKind label_kind() const noexcept { return kind_; }
    bool is_binary() const noexcept { return kind_ == LabelKind::binary; }
    /// True when any instance stores its features sparsely.
    bool is_sparse() const noexcept;

    const Instance& operator[](std::size_t id) const { return instances_[id]; }
    std::span<const Instance> instances() const noexcept { return instances_; }

    /// New dataset holding the given ids in the given order.
    Dataset subset(std::span<const std::size_t> ids) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<Instance> instances_;
    std::size_t dimension_;
    LabelKind kind_;
    std::size_t num_classes_;
};

enum class LabelMode {
    automatic,   ///< binary if every label is -1 or +1, otherwise multi-class
    binary,      ///< label > 0 maps to +1, everything else to -1
    multiclass,  ///< non-negative integer class ids
};

struct LibsvmOptions {
    std::optional<std::size_t> dimension;
    LabelMode labels = LabelMode::automatic;
    std::optional<std::size_t> num_classes;
};

/// Fill ratio above which loaders store instances densely.
inline constexpr double kDenseFillRatio = 0.5;

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& options = {});
Dataset load_libsvm(const std::string& path, const LibsvmOptions& options = {});
/// 1-based indices on disk; dense instances are written with every entry.
void write_libsvm(std::ostream& out, const Dataset& data);
void save_libsvm(const std::string& path, const Dataset& data);

/// IDX image/label pair (big-endian). Pixels become value/255, 10 classes.
Dataset parse_idx(std::istream& images, std::istream& labels);
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Dense `label,v0,v1,...` rows; labels interpreted per `mode`.
Dataset parse_csv(std::istream& in, LabelMode mode = LabelMode::automatic);
Dataset load_csv(const std::string& path, LabelMode mode = LabelMode::automatic);

struct SynthSpec {
    std::size_t n = 1000;
    std::size_t dim = 20;
    double easy_fraction = 0.9;
    double margin = 1.0;
    std::uint64_t seed = 0;
};

/// Unit normal of the separating hyperplane used by synth_biased.
std::vector<double> synth_hyperplane(std::size_t dim, std::uint64_t seed);

/// Binary dataset around a random hyperplane through the origin. The first
/// round(n * easy_fraction) ids lie at distance [5, 10] * margin, the rest
/// within (0, margin]; labels follow the side.
Dataset synth_biased(const SynthSpec& spec);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Train gets ceil(n (1 - f)) ids, test floor(n f); both sorted ascending.
SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace assgd
