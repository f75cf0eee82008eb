// Acceptance suite: one PASS/FAIL line per criterion.
//
//   assgd_acceptance [--expect-fail 9,...] [--only 1,2,...]
//
// Exit status is 0 when the failing set equals the --expect-fail set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "assgd/bench.hpp"
#include "assgd/checks.hpp"
#include "assgd/diagnostics.hpp"
#include "assgd/engine.hpp"
#include "assgd/fixtures.hpp"
#include "assgd/random.hpp"
#include "assgd/sampler.hpp"

using namespace assgd;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool passed;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// A random model and data set of one of the supported shapes.
struct Problem {
    ModelParams params;
    Dataset data;
    LossSpec spec;
};

Problem random_problem(Rng& rng, std::size_t n) {
    const std::size_t dim = 1 + rng.below(8);
    switch (rng.below(4)) {
        case 0:
            return {random_linear(rng, dim, 1), random_dataset(rng, n, dim, LabelKind::binary),
                    {.loss = LossKind::logistic}};
        case 1:
            return {random_linear(rng, dim, 1), random_dataset(rng, n, dim, LabelKind::binary, 2, true),
                    {.loss = LossKind::squared}};
        case 2: {
            const std::vector<std::size_t> w{dim, 1 + rng.below(8), 1};
            return {random_mlp(rng, w, Activation::tanh), random_dataset(rng, n, dim, LabelKind::binary),
                    {.loss = LossKind::hinge}};
        }
        default: {
            const std::size_t c = 2 + rng.below(4);
            const std::vector<std::size_t> w{dim, 1 + rng.below(8), 1 + rng.below(8), c};
            return {random_mlp(rng, w, Activation::sigmoid), random_dataset(rng, n, dim, LabelKind::multiclass, c),
                    {.loss = LossKind::softmax_cross_entropy}};
        }
    }
}

// 1. Enumerated expectation of the re-weighted gradient equals the full gradient.
Outcome unbiasedness() {
    constexpr double kTol = 1e-10;
    Rng rng(101);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + rng.below(100);
        const double beta = 0.05 + 0.9 * rng.uniform();
        auto pr = random_problem(rng, n);
        const auto probs = random_distribution(rng, n, beta);
        for (double p : probs)
            if (p < beta / static_cast<double>(n)) return {false, "distribution below the floor"};
        Eigen::VectorXd expect = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pr.params.parameter_count()));
        for (std::size_t i = 0; i < n; ++i) {
            const auto g = reweight(instance_gradient(pr.params, pr.data[i], pr.spec), n, probs[i]);
            expect += probs[i] * g.flatten();
        }
        const auto full = full_gradient(pr.params, pr.data, pr.spec).flatten();
        const double scale = full.norm();
        if (scale == 0.0) continue;
        worst = std::max(worst, (expect - full).norm() / scale);
    }
    return {worst < kTol, "max rel err " + fmt(worst) + " < " + fmt(kTol) + " over 100 triples"};
}

// 2 and 3 share one run of the optimality suite.
std::vector<CheckResult> variance_results;
const std::vector<CheckResult>& variance_suite() {
    if (variance_results.empty()) variance_results = check_variance(202, 100, 1000);
    return variance_results;
}

Outcome optimality() {
    const auto& r = variance_suite();
    const auto& opt = r[0];
    const auto& closed = r[1];
    return {opt.passed && closed.passed,
            "optimal beats uniform and 1000 random p (worst slack " + fmt(opt.measured) + "), closed form rel err " +
                fmt(closed.measured) + " < " + fmt(closed.tolerance) + ", 100 configs"};
}

Outcome equal_magnitude() {
    const auto& e = variance_suite()[2];
    return {e.passed, "max rel err " + fmt(e.measured) + " < " + fmt(e.tolerance) + " over 100 configs"};
}

// 4. Batched norms match explicit gradients; norm cost is linear in b(m + l).
Outcome fast_norms() {
    constexpr double kTol = 1e-8;
    Rng rng(404);
    double worst = 0.0;
    std::size_t cases = 0, mlp_cases = 0;
    const Activation acts[] = {Activation::sigmoid, Activation::tanh, Activation::relu};
    while (cases < 600) {
        const bool multi = rng.below(2) == 1;
        const std::size_t classes = multi ? 2 + rng.below(6) : 2;
        const std::size_t out = multi ? classes : 1;
        std::vector<std::size_t> widths{1 + rng.below(32)};
        const std::size_t hidden = rng.below(4);
        for (std::size_t k = 0; k < hidden; ++k) widths.push_back(1 + rng.below(32));
        widths.push_back(out);
        const auto params = hidden ? random_mlp(rng, widths, acts[rng.below(3)]) : random_linear(rng, widths[0], out);
        mlp_cases += hidden >= 1;
        const auto data = random_dataset(rng, 1 + rng.below(16), widths[0],
                                         multi ? LabelKind::multiclass : LabelKind::binary, classes, rng.below(2) == 1);
        const LossKind binary_losses[] = {LossKind::squared, LossKind::hinge, LossKind::logistic};
        const LossSpec spec{.loss = multi ? LossKind::softmax_cross_entropy : binary_losses[rng.below(3)]};
        std::vector<WeightedInstance> batch;
        for (const auto& inst : data.instances()) batch.push_back({&inst, 0.05 + 5.0 * rng.uniform()});
        const auto r = batch_backward(params, batch, spec);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const double oracle = grad_norm_explicit(params, *batch[i].instance, spec);
            const double got = r.per_sample_grad_norms[i];
            const double err = oracle == 0.0 ? got : std::abs(got - oracle) / oracle;
            worst = std::max(worst, err);
        }
        ++cases;
    }

    // Cost of the norm accumulation at fixed b as m and l double.
    const Eigen::Index b = 128;
    auto timed = [&](Eigen::Index m, Eigen::Index l) {
        const Eigen::MatrixXd dz = Eigen::MatrixXd::Random(b, m);
        const Eigen::MatrixXd h = Eigen::MatrixXd::Random(b, l);
        std::vector<double> acc(static_cast<std::size_t>(b));
        double best = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 7; ++trial) {
            const auto start = Clock::now();
            for (int k = 0; k < 200; ++k) accumulate_layer_norms(dz, h, 1.0, acc);
            best = std::min(best, std::chrono::duration<double>(Clock::now() - start).count());
        }
        return best;
    };
    double worst_ratio_dev = 0.0;
    std::string ratios;
    for (Eigen::Index size : {128, 256, 512}) {
        const double ratio = timed(2 * size, 2 * size) / timed(size, size);
        ratios += (ratios.empty() ? "" : ",") + fmt(ratio);
        // Linear prediction is 2; within 2x of it means [1, 4].
        if (ratio < 1.0 || ratio > 4.0) worst_ratio_dev = std::max(worst_ratio_dev, ratio);
    }
    const bool ok = worst < kTol && mlp_cases >= 300 && worst_ratio_dev == 0.0;
    return {ok, "max rel err " + fmt(worst) + " < " + fmt(kTol) + " over " + std::to_string(cases) + " cases (" +
                    std::to_string(mlp_cases) + " MLP); doubled m,l time ratios " + ratios + " in [1, 4]"};
}

// 5. Finite differences for every loss, model and regularizer.
Outcome gradients() {
    const auto r = check_gradients(505);
    double worst = 0.0;
    bool ok = true;
    for (const auto& c : r) {
        worst = std::max(worst, c.measured);
        ok = ok && c.passed;
    }
    return {ok, "max rel err " + fmt(worst) + " < 1e-05 over " + std::to_string(r.size()) + " combinations"};
}

// Linear-scan reference driven by the same variate as WeightIndex::sample_with.
std::size_t scan(std::span<const double> w, double beta, double u, double& edge) {
    const std::size_t n = w.size();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    edge = std::numeric_limits<double>::infinity();
    if (total == 0.0) return uniform_index(u, n);
    if (u < beta) return uniform_index(u / beta, n);
    const double target = (u - beta) / (1.0 - beta) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] <= 0.0) continue;
        last = i;
        acc += w[i];
        edge = std::min(edge, std::abs(acc - target) / total);
        if (acc > target) return i;
    }
    return last;
}

// 6. Chi-square fit, the smoothing floor, and prefix tree vs linear scan.
Outcome sampler() {
    const auto r = check_sampler(606, 20, 1000000);
    std::size_t chi_pass = 0, floor_pass = 0;
    for (const auto& c : r) {
        if (c.name.rfind("sampler chi-square", 0) == 0) chi_pass += c.passed;
        else floor_pass += c.passed;
    }
    Rng rng(607);
    std::size_t mismatches = 0, compared = 0;
    for (int v = 0; v < 20; ++v) {
        const std::size_t n = 1 + rng.below(64);
        const double beta = std::array{0.0, 0.1, 0.5}[v % 3];
        auto w = random_weights(rng, n);
        if (v % 4 == 0) w[rng.below(n)] = 0.0;
        const WeightIndex index(w, beta);
        for (int k = 0; k < 100000; ++k) {
            const double u = rng.uniform();
            double edge;
            const auto expect = scan(w, beta, u, edge);
            if (edge < 1e-12) continue;  // rounding tie at a bucket edge
            ++compared;
            mismatches += index.sample_with(u) != expect;
        }
    }
    const bool ok = chi_pass == 20 && floor_pass == 20 && mismatches == 0;
    return {ok, std::to_string(chi_pass) + "/20 chi-square at alpha 1e-3 on 1e6 draws, " + std::to_string(floor_pass) +
                    "/20 floors exact, " + std::to_string(mismatches) + " tree/scan mismatches in " +
                    std::to_string(compared) + " variates"};
}

// 7. ASSGD with beta = 1 reproduces MBSGD bitwise.
Outcome degeneracy() {
    const auto data = synth_biased({.n = 1000, .dim = 10, .easy_fraction = 0.9, .seed = 7});
    TrainConfig c;
    c.eta = 0.5;
    c.batch_size = 16;
    c.iterations = 1000;
    c.eval_every = 10;
    c.seed = 70;
    c.loss = {.loss = LossKind::logistic, .regularizer = RegularizerKind::l2, .lambda = 1e-3};
    c.algorithm = Algorithm::mbsgd;
    const auto m = train(data, c);
    c.algorithm = Algorithm::assgd;
    c.beta = 1.0;
    const auto a = train(data, c);
    bool same = m.metrics.size() == a.metrics.size() && m.params.flatten() == a.params.flatten();
    for (std::size_t k = 0; same && k < m.metrics.size(); ++k)
        same = m.metrics[k].iteration == a.metrics[k].iteration && m.metrics[k].train_loss == a.metrics[k].train_loss &&
               m.metrics[k].test_error == a.metrics[k].test_error;
    return {same, "1000 iterations, " + std::to_string(m.metrics.size()) + " metric rows and final parameters " +
                      (same ? "bitwise equal" : "differ")};
}

// Shared benchmark setting for 8 and 9.
RunConfig bench_config() {
    RunConfig rc;
    rc.data.synth = {.n = 4000, .dim = 20, .easy_fraction = 0.9, .margin = 1.0, .seed = 0};
    auto& t = rc.train;
    t.loss = {.loss = LossKind::logistic, .regularizer = RegularizerKind::l2, .lambda = 0.01};
    t.eta = 1.0;
    t.lr_decay = 0.01;
    t.batch_size = 16;
    t.iterations = 3000;
    t.beta = 0.1;
    t.eval_every = 10;
    for (std::uint64_t s = 0; s < 10; ++s) rc.seeds.push_back(s);
    return rc;
}

// 8. Exact ASSGD variance vs uniform, every 100 iterations, second half.
Outcome variance_reduction() {
    constexpr double kLimit = 0.7;
    const auto rc = bench_config();
    const auto data = synth_biased(rc.data.synth);
    const std::vector<double> uniform(data.size(), 1.0 / static_cast<double>(data.size()));
    std::vector<double> ratios;
    for (auto seed : rc.seeds) {
        TrainConfig c = rc.train;
        c.algorithm = Algorithm::assgd;
        c.seed = seed;
        c.eval_every = 100;
        std::vector<double> sampler_v, uniform_v;
        TrainOptions opts;
        opts.on_eval = [&](const EvalPoint& e) {
            if (e.iteration % 100 != 0) return;
            const auto g = per_instance_gradients(e.params, data, c.loss);
            sampler_v.push_back(variance_from_gradients(g, e.probabilities, c.batch_size));
            uniform_v.push_back(variance_from_gradients(g, uniform, c.batch_size));
        };
        train(data, c, opts);
        ratios.push_back(second_half_mean(sampler_v) / second_half_mean(uniform_v));
    }
    const double med = median(ratios);
    return {med < kLimit, "median second-half variance ratio " + fmt(med) + " < " + fmt(kLimit) + " over 10 seeds"};
}

// 9. Iterations to the MBSGD 80%-budget loss, ASSGD and ASHR vs MBSGD.
Outcome iterations_to_accuracy() {
    constexpr double kLimit = 0.8;
    auto rc = bench_config();
    rc.algorithms = {Algorithm::mbsgd, Algorithm::assgd, Algorithm::ashr};
    const auto data = synth_biased(rc.data.synth);
    const auto result = run_bench(rc, data);
    auto med = [&](Algorithm a) {
        std::vector<double> v;
        for (const auto& r : result.runs)
            if (r.algorithm == a)
                v.push_back(r.iterations_to_target ? static_cast<double>(*r.iterations_to_target)
                                                   : std::numeric_limits<double>::infinity());
        return median(v);
    };
    const double m = med(Algorithm::mbsgd), a = med(Algorithm::assgd), h = med(Algorithm::ashr);
    const bool a_ok = a <= kLimit * m, h_ok = h <= kLimit * m;
    auto show = [](double v) { return std::isfinite(v) ? fmt(v) : std::string("unreached"); };
    return {a_ok && h_ok, "median iterations mbsgd " + show(m) + ", assgd " + show(a) + " (" +
                              (a_ok ? "<=" : ">") + " 0.8x), ashr " + show(h) + " (" + (h_ok ? "<=" : ">") +
                              " 0.8x), 10 paired seeds"};
}

// 10. Per-iteration time of ASSGD vs MBSGD on a 784-128-10 MLP, b = 128.
Outcome overhead() {
    constexpr double kLimit = 1.5;
    Rng rng(1010);
    std::vector<Instance> inst;
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> x(784);
        for (auto& v : x) v = rng.uniform() < 0.8 ? 0.0 : rng.uniform();
        inst.push_back({FeatureVector::dense(std::move(x)), static_cast<int>(rng.below(10))});
    }
    const Dataset data(std::move(inst), 784, LabelKind::multiclass, 10);
    TrainConfig c;
    c.loss = {.loss = LossKind::softmax_cross_entropy};
    c.model = {.kind = ModelKind::mlp, .hidden = {128}, .activation = Activation::sigmoid};
    c.eta = 0.05;
    c.batch_size = 128;
    c.iterations = 150;
    c.eval_every = 150;
    auto per_iter = [&](Algorithm a) {
        c.algorithm = a;
        const auto r = train(data, c);
        return r.metrics.back().wall_time_ms / static_cast<double>(c.iterations);
    };
    double best_m = std::numeric_limits<double>::infinity(), best_a = best_m;
    for (int round = 0; round < 3; ++round) {
        best_m = std::min(best_m, per_iter(Algorithm::mbsgd));
        best_a = std::min(best_a, per_iter(Algorithm::assgd));
    }
    const double ratio = best_a / best_m;
    return {ratio <= kLimit, "assgd " + fmt(best_a) + " ms vs mbsgd " + fmt(best_m) + " ms per iteration, ratio " +
                                 fmt(ratio) + " <= " + fmt(kLimit)};
}

// 11. Stage subsets, the proximal term at the anchor, one-stage equivalence.
Outcome stage_semantics() {
    const auto data = synth_biased({.n = 800, .dim = 8, .easy_fraction = 0.9, .seed = 11});
    TrainConfig c;
    c.algorithm = Algorithm::ashr;
    c.eta = 0.5;
    c.batch_size = 16;
    c.iterations = 1200;
    c.eval_every = 50;
    c.seed = 110;
    c.loss = {.loss = LossKind::logistic, .regularizer = RegularizerKind::l2, .lambda = 1e-3};
    const auto plan = plan_stages(c.stage, data.size(), c.batch_size);
    std::vector<std::vector<std::size_t>> drawn;
    TrainOptions opts;
    opts.on_batch = [&](std::size_t, std::span<const std::size_t> ids) { drawn.emplace_back(ids.begin(), ids.end()); };
    const auto r = train(data, c, opts);
    bool subsets = !r.stages.empty();
    std::size_t t = 0;
    for (const auto& s : r.stages) {
        const std::set<std::size_t> ids(s.subset.begin(), s.subset.end());
        subsets = subsets && s.subset.size() == plan.m && ids.size() == plan.m;
        for (std::size_t k = 0; k < s.iterations; ++k, ++t)
            for (auto id : drawn[t]) subsets = subsets && ids.count(id) == 1;
    }
    subsets = subsets && t == c.iterations;

    // First step of a stage sits at the anchor, so gamma cannot matter.
    TrainConfig one = c;
    one.iterations = 2;
    one.eval_every = 1;
    std::vector<Eigen::VectorXd> p0, p1;
    TrainOptions o0, o1;
    o0.on_eval = [&](const EvalPoint& e) { p0.push_back(e.params.flatten()); };
    o1.on_eval = [&](const EvalPoint& e) { p1.push_back(e.params.flatten()); };
    train_ashr(data, one, {.g = 2, .gamma = 0.0}, o0);
    train_ashr(data, one, {.g = 2, .gamma = 3.0}, o1);
    const bool anchor = p0[0] == p1[0] && p0[1] != p1[1];

    TrainConfig full = c;
    full.algorithm = Algorithm::assgd;
    const auto a = train(data, full);
    const auto h = train_ashr(data, full, {.m = data.size(), .g = full.iterations, .gamma = 0.0});
    bool same = a.params.flatten() == h.params.flatten() && a.metrics.size() == h.metrics.size();
    for (std::size_t k = 0; same && k < a.metrics.size(); ++k) same = a.metrics[k].train_loss == h.metrics[k].train_loss;

    return {subsets && anchor && same, std::to_string(r.stages.size()) + " stages of m=" + std::to_string(plan.m) +
                                           (subsets ? " distinct, draws inside subset" : " FAILED subset checks") +
                                           "; proximal zero at anchor: " + (anchor ? "yes" : "no") +
                                           "; one-stage ASHR == ASSGD bitwise: " + (same ? "yes" : "no")};
}

std::set<int> parse_list(const char* s) {
    std::set<int> out;
    std::stringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.insert(std::stoi(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> expect_fail, only;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (!std::strcmp(argv[i], "--expect-fail")) expect_fail = parse_list(argv[i + 1]);
        else if (!std::strcmp(argv[i], "--only")) only = parse_list(argv[i + 1]);
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"unbiasedness", unbiasedness},
        {"variance optimality", optimality},
        {"equal-magnitude corollary", equal_magnitude},
        {"fast per-sample norms", fast_norms},
        {"gradient correctness", gradients},
        {"sampler exactness", sampler},
        {"beta = 1 degeneracy", degeneracy},
        {"variance reduction in training", variance_reduction},
        {"iterations to accuracy", iterations_to_accuracy},
        {"per-iteration overhead", overhead},
        {"ASHR stage semantics", stage_semantics},
    };
    std::set<int> failed;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k + 1);
        if (!only.empty() && !only.count(id)) continue;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        if (!o.passed) failed.insert(id);
        std::cout << (o.passed ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << o.detail
                  << " (" << fmt(secs) << " s)" << (o.passed || !expect_fail.count(id) ? "" : " [expected failure]")
                  << std::endl;
    }
    std::set<int> unexpected;
    std::set_difference(failed.begin(), failed.end(), expect_fail.begin(), expect_fail.end(),
                        std::inserter(unexpected, unexpected.end()));
    for (int id : expect_fail)
        if (!failed.count(id) && (only.empty() || only.count(id)))
            std::cout << "note: criterion " << id << " was expected to fail but passed" << std::endl;
    std::cout << failed.size() << " failed, " << unexpected.size() << " unexpected" << std::endl;
    return unexpected.empty() ? 0 : 1;
}
