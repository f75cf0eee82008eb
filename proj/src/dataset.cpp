#include "assgd/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "assgd/error.hpp"
#include "assgd/random.hpp"

namespace assgd {

FeatureVector FeatureVector::sparse(std::vector<std::uint32_t> indices, std::vector<double> values) {
    if (indices.size() != values.size())
        throw ArgumentError("sparse vector: index/value length mismatch");
    for (std::size_t k = 1; k < indices.size(); ++k)
        if (indices[k] <= indices[k - 1])
            throw ArgumentError("sparse vector: indices must be strictly increasing");
    for (double v : values)
        if (!std::isfinite(v)) throw ArgumentError("feature value is not finite");
    FeatureVector f;
    f.sparse_ = true;
    f.indices_ = std::move(indices);
    f.values_ = std::move(values);
    return f;
}

FeatureVector FeatureVector::dense(std::vector<double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw ArgumentError("feature value is not finite");
    FeatureVector f;
    f.sparse_ = false;
    f.values_ = std::move(values);
    return f;
}

std::size_t FeatureVector::extent() const noexcept {
    if (!sparse_) return values_.size();
    return indices_.empty() ? 0 : static_cast<std::size_t>(indices_.back()) + 1;
}

double FeatureVector::squared_norm() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return s;
}

double FeatureVector::dot(std::span<const double> dense) const noexcept {
    double s = 0.0;
    for_each([&](std::size_t j, double v) { s += v * dense[j]; });
    return s;
}

std::vector<double> FeatureVector::to_dense(std::size_t dimension) const {
    std::vector<double> out(dimension, 0.0);
    for_each([&](std::size_t j, double v) { out.at(j) = v; });
    return out;
}

Dataset::Dataset(std::vector<Instance> instances, std::size_t dimension, LabelKind kind,
                 std::size_t num_classes)
    : instances_(std::move(instances)), dimension_(dimension), kind_(kind),
      num_classes_(kind == LabelKind::binary ? 2 : num_classes) {
    if (instances_.empty()) throw ArgumentError("dataset must contain at least one instance");
    if (dimension_ == 0) throw ArgumentError("dataset dimension must be positive");
    if (num_classes_ == 0) throw ArgumentError("dataset must have at least one class");
    for (std::size_t i = 0; i < instances_.size(); ++i) {
        const auto& inst = instances_[i];
        if (inst.features.extent() > dimension_)
            throw ArgumentError("instance " + std::to_string(i) + " has a feature index beyond dimension");
        if (kind_ == LabelKind::binary) {
            if (inst.label != 1 && inst.label != -1)
                throw ArgumentError("instance " + std::to_string(i) + ": binary label must be +1 or -1");
        } else if (inst.label < 0 || static_cast<std::size_t>(inst.label) >= num_classes_) {
            throw ArgumentError("instance " + std::to_string(i) + ": class id out of range");
        }
    }
}

bool Dataset::is_sparse() const noexcept {
    return std::any_of(instances_.begin(), instances_.end(),
                       [](const Instance& x) { return x.features.is_sparse(); });
}

Dataset Dataset::subset(std::span<const std::size_t> ids) const {
    std::vector<Instance> out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(instances_.at(id));
    return Dataset(std::move(out), dimension_, kind_, num_classes_);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && p == tok.data() + tok.size();
}

bool parse_index(std::string_view tok, std::uint64_t& out) {
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && p == tok.data() + tok.size();
}

struct RawRow {
    double label;
    std::vector<std::uint32_t> indices;
    std::vector<double> values;
    std::size_t line;
};

std::vector<int> map_labels(const std::vector<RawRow>& rows, LabelMode mode, LabelKind& kind,
                            std::size_t& num_classes, std::optional<std::size_t> classes_override) {
    if (mode == LabelMode::automatic) {
        bool pm = std::all_of(rows.begin(), rows.end(),
                              [](const RawRow& r) { return r.label == 1.0 || r.label == -1.0; });
        mode = pm ? LabelMode::binary : LabelMode::multiclass;
    }
    std::vector<int> labels;
    labels.reserve(rows.size());
    if (mode == LabelMode::binary) {
        kind = LabelKind::binary;
        num_classes = 2;
        for (const auto& r : rows) labels.push_back(r.label > 0 ? 1 : -1);
        return labels;
    }
    kind = LabelKind::multiclass;
    int max_label = 0;
    for (const auto& r : rows) {
        if (r.label < 0 || r.label != std::floor(r.label) || r.label > 1e9)
            throw ParseError("class label must be a non-negative integer", r.line);
        labels.push_back(static_cast<int>(r.label));
        max_label = std::max(max_label, labels.back());
    }
    num_classes = classes_override.value_or(static_cast<std::size_t>(max_label) + 1);
    return labels;
}

std::size_t count_stored(const std::vector<RawRow>& rows) {
    std::size_t s = 0;
    for (const auto& r : rows) s += r.values.size();
    return s;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const LibsvmOptions& options) {
    std::vector<RawRow> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t max_extent = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = trim(body.substr(0, hash));
        if (body.empty()) continue;

        RawRow row{0.0, {}, {}, lineno};
        std::size_t pos = 0;
        bool first = true;
        while (pos < body.size()) {
            auto end = body.find_first_of(" \t", pos);
            if (end == std::string_view::npos) end = body.size();
            auto tok = body.substr(pos, end - pos);
            pos = body.find_first_not_of(" \t", end);
            if (pos == std::string_view::npos) pos = body.size();
            if (tok.empty()) continue;
            if (first) {
                if (!parse_double(tok, row.label) || !std::isfinite(row.label))
                    throw ParseError("bad label '" + std::string(tok) + "'", lineno);
                first = false;
                continue;
            }
            auto colon = tok.find(':');
            std::uint64_t idx = 0;
            double val = 0.0;
            if (colon == std::string_view::npos || !parse_index(tok.substr(0, colon), idx) ||
                !parse_double(tok.substr(colon + 1), val))
                throw ParseError("bad feature token '" + std::string(tok) + "'", lineno);
            if (idx == 0) throw ParseError("feature indices are 1-based", lineno);
            if (idx > 0xffffffffULL) throw ParseError("feature index too large", lineno);
            if (!std::isfinite(val)) throw ParseError("feature value is not finite", lineno);
            auto zero_based = static_cast<std::uint32_t>(idx - 1);
            if (!row.indices.empty() && zero_based <= row.indices.back())
                throw ParseError("feature indices must be strictly increasing", lineno);
            row.indices.push_back(zero_based);
            row.values.push_back(val);
        }
        if (!row.indices.empty()) max_extent = std::max<std::size_t>(max_extent, row.indices.back() + 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no instances", 0);

    std::size_t dim = max_extent;
    if (options.dimension) {
        if (*options.dimension < max_extent)
            throw ParseError("feature index exceeds configured dimension", 0);
        dim = *options.dimension;
    }
    dim = std::max<std::size_t>(dim, 1);

    LabelKind kind{};
    std::size_t classes = 0;
    auto labels = map_labels(rows, options.labels, kind, classes, options.num_classes);

    bool dense = static_cast<double>(count_stored(rows)) >
                 kDenseFillRatio * static_cast<double>(rows.size()) * static_cast<double>(dim);
    std::vector<Instance> instances;
    instances.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& r = rows[i];
        FeatureVector f;
        if (dense) {
            std::vector<double> v(dim, 0.0);
            for (std::size_t k = 0; k < r.indices.size(); ++k) v[r.indices[k]] = r.values[k];
            f = FeatureVector::dense(std::move(v));
        } else {
            f = FeatureVector::sparse(std::move(r.indices), std::move(r.values));
        }
        instances.push_back({std::move(f), labels[i]});
    }
    return Dataset(std::move(instances), dim, kind, classes);
}

Dataset load_libsvm(const std::string& path, const LibsvmOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse_libsvm(in, options);
}

namespace {

void put_double(std::ostream& out, double v) {
    std::array<char, 32> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), p - buf.data());
}

}  // namespace

void write_libsvm(std::ostream& out, const Dataset& data) {
    for (const auto& inst : data.instances()) {
        if (data.is_binary() && inst.label > 0) out << '+';
        out << inst.label;
        inst.features.for_each([&](std::size_t j, double v) {
            out << ' ' << (j + 1) << ':';
            put_double(out, v);
        });
        out << '\n';
    }
}

void save_libsvm(const std::string& path, const Dataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_libsvm(out, data);
    if (!out) throw Error("write failed: " + path);
}

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4))
        throw FormatError(std::string("truncated IDX header (") + what + ")");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

}  // namespace

Dataset parse_idx(std::istream& images, std::istream& labels) {
    constexpr std::uint32_t kImageMagic = 0x00000803;
    constexpr std::uint32_t kLabelMagic = 0x00000801;
    if (auto m = read_be32(images, "image magic"); m != kImageMagic)
        throw FormatError("image file magic mismatch");
    if (auto m = read_be32(labels, "label magic"); m != kLabelMagic)
        throw FormatError("label file magic mismatch");
    const std::size_t count = read_be32(images, "image count");
    const std::size_t rows = read_be32(images, "rows");
    const std::size_t cols = read_be32(images, "cols");
    const std::size_t label_count = read_be32(labels, "label count");
    if (count != label_count)
        throw FormatError("image/label count mismatch: " + std::to_string(count) + " images, " +
                          std::to_string(label_count) + " labels");
    const std::size_t dim = rows * cols;

    std::vector<Instance> out;
    out.reserve(count);
    std::vector<unsigned char> pixels(dim);
    for (std::size_t i = 0; i < count; ++i) {
        if (!images.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(dim)))
            throw FormatError("truncated image payload at image " + std::to_string(i));
        char lab = 0;
        if (!labels.get(lab)) throw FormatError("truncated label payload at label " + std::to_string(i));
        auto label = static_cast<unsigned char>(lab);
        if (label >= 10) throw FormatError("label " + std::to_string(label) + " outside 0..9");
        std::vector<double> v(dim);
        for (std::size_t j = 0; j < dim; ++j) v[j] = pixels[j] / 255.0;
        out.push_back({FeatureVector::dense(std::move(v)), static_cast<int>(label)});
    }
    return Dataset(std::move(out), dim, LabelKind::multiclass, 10);
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw Error("cannot open " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw Error("cannot open " + labels_path);
    return parse_idx(images, labels);
}

Dataset parse_csv(std::istream& in, LabelMode mode) {
    std::vector<RawRow> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        RawRow row{0.0, {}, {}, lineno};
        std::size_t col = 0;
        std::size_t pos = 0;
        while (true) {
            auto end = body.find(',', pos);
            auto tok = trim(body.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
            double v = 0.0;
            if (!parse_double(tok, v) || !std::isfinite(v))
                throw ParseError("bad CSV field '" + std::string(tok) + "'", lineno);
            if (col == 0) {
                row.label = v;
            } else {
                row.indices.push_back(static_cast<std::uint32_t>(col - 1));
                row.values.push_back(v);
            }
            ++col;
            if (end == std::string_view::npos) break;
            pos = end + 1;
        }
        if (rows.empty()) width = row.values.size();
        else if (row.values.size() != width) throw ParseError("inconsistent column count", lineno);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no instances", 0);
    LabelKind kind{};
    std::size_t classes = 0;
    auto labels = map_labels(rows, mode, kind, classes, std::nullopt);
    std::vector<Instance> instances;
    for (std::size_t i = 0; i < rows.size(); ++i)
        instances.push_back({FeatureVector::dense(std::move(rows[i].values)), labels[i]});
    return Dataset(std::move(instances), std::max<std::size_t>(width, 1), kind, classes);
}

Dataset load_csv(const std::string& path, LabelMode mode) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse_csv(in, mode);
}

std::vector<double> synth_hyperplane(std::size_t dim, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0));
    std::vector<double> u(dim);
    double norm2 = 0.0;
    do {
        for (auto& v : u) v = rng.normal();
        norm2 = std::inner_product(u.begin(), u.end(), u.begin(), 0.0);
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& v : u) v *= inv;
    return u;
}

Dataset synth_biased(const SynthSpec& spec) {
    if (spec.n < 2) throw ArgumentError("synth_biased: n must be at least 2");
    if (spec.dim < 1) throw ArgumentError("synth_biased: dim must be at least 1");
    if (!(spec.easy_fraction >= 0.0 && spec.easy_fraction <= 1.0))
        throw ArgumentError("synth_biased: easy_fraction must lie in [0, 1]");
    if (!(spec.margin > 0.0) || !std::isfinite(spec.margin))
        throw ArgumentError("synth_biased: margin must be positive");

    const auto normal = synth_hyperplane(spec.dim, spec.seed);
    Rng rng(derive_seed(spec.seed, 1));
    const auto n_easy = static_cast<std::size_t>(std::llround(spec.easy_fraction * static_cast<double>(spec.n)));

    std::vector<Instance> out;
    out.reserve(spec.n);
    std::vector<double> x(spec.dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (auto& v : x) v = rng.normal();
        // Remove the normal component, then place the point at a signed distance.
        const double along = std::inner_product(x.begin(), x.end(), normal.begin(), 0.0);
        const bool easy = i < n_easy;
        // 1 - u lies in (0, 1], so hard points never sit exactly on the plane.
        const double r = 1.0 - rng.uniform();
        const double dist = easy ? spec.margin * (5.0 + 5.0 * r) : spec.margin * r;
        const int label = rng.uniform() < 0.5 ? -1 : 1;
        for (std::size_t j = 0; j < spec.dim; ++j) x[j] += (label * dist - along) * normal[j];
        out.push_back({FeatureVector::dense(x), label});
    }
    return Dataset(std::move(out), spec.dim, LabelKind::binary);
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ArgumentError("test fraction must lie in (0, 1)");
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 1e-9));
    if (n_test == 0 || n_test >= n) throw ArgumentError("split would produce an empty partition");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    SplitIndices s;
    s.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    auto s = split_indices(data.size(), test_fraction, seed);
    return {data.subset(s.train), data.subset(s.test)};
}

}  // namespace assgd
