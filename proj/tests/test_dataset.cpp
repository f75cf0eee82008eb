#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "assgd/dataset.hpp"
#include "assgd/error.hpp"

using namespace assgd;

namespace {

Dataset parse(const std::string& text, LibsvmOptions opts = {}) {
    std::istringstream in(text);
    return parse_libsvm(in, opts);
}

std::string be32(std::uint32_t v) {
    std::string s(4, '\0');
    for (int k = 0; k < 4; ++k) s[k] = static_cast<char>((v >> (24 - 8 * k)) & 0xff);
    return s;
}

double signed_distance(const Instance& inst, const std::vector<double>& normal) {
    return inst.features.dot(normal);
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("libsvm line with 1-based indices") {
    const auto d = parse("+1 1:0.5 3:1.0\n", {.dimension = 10});
    REQUIRE(d.size() == 1);
    CHECK(d[0].label == 1);
    const auto& f = d[0].features;
    REQUIRE(f.is_sparse());
    CHECK(std::vector<std::uint32_t>(f.indices().begin(), f.indices().end()) == std::vector<std::uint32_t>{0, 2});
    CHECK(std::vector<double>(f.values().begin(), f.values().end()) == std::vector<double>{0.5, 1.0});
    CHECK(d.dimension() == 10);
}

TEST_CASE("libsvm dimension defaults to the largest index") {
    const auto d = parse("+1 1:0.5 3:1.0\n-1 7:2\n");
    CHECK(d.dimension() == 7);
    CHECK(d.is_binary());
    CHECK(d[1].label == -1);
}

TEST_CASE("libsvm dense storage when the fill ratio is high") {
    const auto d = parse("+1 1:0.5 3:1.0\n");
    CHECK_FALSE(d[0].features.is_sparse());
    CHECK(d[0].features.to_dense(3) == std::vector<double>{0.5, 0.0, 1.0});
}

TEST_CASE("libsvm line without features") {
    const auto d = parse("-1\n", {.dimension = 3});
    CHECK(d[0].label == -1);
    CHECK(d[0].features.stored() == 0);
}

TEST_CASE("libsvm rejects non-increasing indices with a line number") {
    try {
        parse("+1 1:1\n+1 3:1 2:1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse("+1 2:1 2:1\n"), ParseError);
    CHECK_THROWS_AS(parse("+1 0:1\n"), ParseError);
    CHECK_THROWS_AS(parse("+1 1:abc\n"), ParseError);
    CHECK_THROWS_AS(parse("x 1:1\n"), ParseError);
    CHECK_THROWS_AS(parse("+1 1:nan\n"), ParseError);
}

TEST_CASE("libsvm multi-class labels") {
    const auto d = parse("0 1:1\n2 2:1\n1 1:3\n");
    CHECK(d.label_kind() == LabelKind::multiclass);
    CHECK(d.num_classes() == 3);
}

TEST_CASE("libsvm round trip") {
    const auto d = parse("+1 1:0.5 3:1.0\n-1 7:2.25\n-1\n+1 2:1e-300 5:-3.141592653589793\n", {.dimension = 9});
    std::stringstream s;
    write_libsvm(s, d);
    const auto back = parse(s.str(), {.dimension = 9});
    CHECK(back == d);

    const auto dense = synth_biased({.n = 20, .dim = 4, .seed = 3});
    std::stringstream t;
    write_libsvm(t, dense);
    CHECK(parse(t.str(), {.dimension = 4}) == dense);
}

TEST_CASE("idx images are scaled by 1/255") {
    std::istringstream images(be32(0x803) + be32(1) + be32(2) + be32(2) + std::string("\x00\xff\x80\x40", 4));
    std::istringstream labels(be32(0x801) + be32(1) + std::string("\x07", 1));
    const auto d = parse_idx(images, labels);
    REQUIRE(d.size() == 1);
    CHECK(d.dimension() == 4);
    CHECK(d.num_classes() == 10);
    CHECK(d[0].label == 7);
    CHECK(d[0].features.to_dense(4) == std::vector<double>{0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0});
}

TEST_CASE("idx errors") {
    std::istringstream bad_magic(be32(0x804) + be32(1) + be32(1) + be32(1) + std::string("\x00", 1));
    std::istringstream labels(be32(0x801) + be32(1) + std::string("\x01", 1));
    CHECK_THROWS_AS(parse_idx(bad_magic, labels), FormatError);

    std::istringstream two(be32(0x803) + be32(2) + be32(1) + be32(1) + std::string("\x00\x01", 2));
    std::istringstream one(be32(0x801) + be32(1) + std::string("\x01", 1));
    CHECK_THROWS_AS(parse_idx(two, one), FormatError);

    std::istringstream truncated(be32(0x803) + be32(1) + be32(2) + be32(2) + std::string("\x00", 1));
    std::istringstream l2(be32(0x801) + be32(1) + std::string("\x01", 1));
    CHECK_THROWS_AS(parse_idx(truncated, l2), FormatError);
}

TEST_CASE("csv rows") {
    std::istringstream in("1,0.5,2\n-1,1,1\n");
    const auto d = parse_csv(in);
    CHECK(d.size() == 2);
    CHECK(d.dimension() == 2);
    CHECK(d[1].label == -1);
    std::istringstream ragged("1,0.5,2\n-1,1\n");
    CHECK_THROWS_AS(parse_csv(ragged), ParseError);
}

TEST_CASE("dataset validation") {
    CHECK_THROWS_AS(Dataset({}, 2, LabelKind::binary), ArgumentError);
    CHECK_THROWS_AS(Dataset({{FeatureVector::dense({1.0}), 0}}, 1, LabelKind::binary), ArgumentError);
    CHECK_THROWS_AS(Dataset({{FeatureVector::dense({1.0}), 3}}, 1, LabelKind::multiclass, 3), ArgumentError);
    CHECK_THROWS_AS(Dataset({{FeatureVector::sparse({4}, {1.0}), 1}}, 2, LabelKind::binary), ArgumentError);
    CHECK_THROWS(FeatureVector::sparse({2, 1}, {1.0, 1.0}));
    CHECK_THROWS(FeatureVector::dense({std::nan("")}));
}

TEST_CASE("synth_biased easy and hard distances") {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
        const SynthSpec all_easy{.n = 100, .dim = 5, .easy_fraction = 1.0, .margin = 0.5, .seed = seed};
        const auto normal = synth_hyperplane(5, seed);
        const auto easy = synth_biased(all_easy);
        for (const auto& inst : easy.instances())
            CHECK(std::abs(signed_distance(inst, normal)) >= 5 * 0.5 - 1e-12);

        const SynthSpec all_hard{.n = 100, .dim = 5, .easy_fraction = 0.0, .margin = 0.5, .seed = seed};
        const auto hard = synth_biased(all_hard);
        for (const auto& inst : hard.instances())
            CHECK(std::abs(signed_distance(inst, normal)) <= 0.5 + 1e-12);
    }
}

TEST_CASE("synth_biased labels follow the hyperplane side") {
    const SynthSpec spec{.n = 500, .dim = 7, .easy_fraction = 0.6, .margin = 1.0, .seed = 11};
    const auto d = synth_biased(spec);
    const auto normal = synth_hyperplane(7, 11);
    std::size_t easy = 0;
    for (const auto& inst : d.instances()) {
        const double s = signed_distance(inst, normal);
        CHECK((s > 0 ? 1 : -1) == inst.label);
        if (std::abs(s) >= 5.0) ++easy;
    }
    CHECK(easy == 300);
}

TEST_CASE("synth_biased is deterministic in the seed") {
    const SynthSpec spec{.n = 50, .dim = 3, .easy_fraction = 0.9, .margin = 1.0, .seed = 5};
    CHECK(synth_biased(spec) == synth_biased(spec));
    auto other = spec;
    other.seed = 6;
    CHECK_FALSE(synth_biased(spec) == synth_biased(other));
    CHECK_THROWS_AS(synth_biased({.n = 1}), ArgumentError);
    CHECK_THROWS_AS(synth_biased({.n = 10, .easy_fraction = 1.5}), ArgumentError);
}

TEST_CASE("split sizes") {
    auto s = split_indices(10, 0.2, 1);
    CHECK(s.train.size() == 8);
    CHECK(s.test.size() == 2);
    s = split_indices(10, 0.99, 1);
    CHECK(s.train.size() == 1);
    CHECK(s.test.size() == 9);
    CHECK_THROWS_AS(split_indices(10, 0.01, 1), ArgumentError);
    CHECK_THROWS_AS(split_indices(10, 1.0, 1), ArgumentError);
}

TEST_CASE("split is a deterministic partition") {
    const auto d = synth_biased({.n = 97, .dim = 3, .seed = 2});
    const auto a = split_indices(d.size(), 0.3, 42);
    const auto b = split_indices(d.size(), 0.3, 42);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    std::multiset<std::size_t> all(a.train.begin(), a.train.end());
    all.insert(a.test.begin(), a.test.end());
    CHECK(all.size() == d.size());
    CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == d.size());

    const auto [train, test] = split(d, 0.3, 42);
    CHECK(train.size() + test.size() == d.size());
    for (std::size_t k = 0; k < test.size(); ++k) CHECK(test[k] == d[a.test[k]]);
}

}  // TEST_SUITE
