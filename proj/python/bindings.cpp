#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "assgd/checks.hpp"
#include "assgd/diagnostics.hpp"
#include "assgd/engine.hpp"
#include "assgd/error.hpp"
#include "assgd/random.hpp"
#include "assgd/sampler.hpp"

namespace py = pybind11;
using namespace assgd;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Dataset dataset_from_arrays(const RowMatrix& x, const std::vector<int>& y, bool multiclass, std::size_t classes) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ArgumentError("x and y have different lengths");
    std::vector<Instance> out;
    out.reserve(y.size());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        std::vector<double> row(x.row(i).data(), x.row(i).data() + x.cols());
        out.push_back({FeatureVector::dense(std::move(row)), y[static_cast<std::size_t>(i)]});
    }
    if (!multiclass) return Dataset(std::move(out), static_cast<std::size_t>(x.cols()), LabelKind::binary);
    if (classes == 0)
        for (int v : y) classes = std::max<std::size_t>(classes, static_cast<std::size_t>(std::max(v, 0)) + 1);
    return Dataset(std::move(out), static_cast<std::size_t>(x.cols()), LabelKind::multiclass, classes);
}

RowMatrix dataset_features(const Dataset& d) {
    RowMatrix x = RowMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.dimension()));
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i].features.for_each([&](std::size_t j, double v) { x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v; });
    return x;
}

LossSpec loss_spec(const std::string& loss, const std::string& regularizer, double lambda) {
    return {parse_loss(loss), parse_regularizer(regularizer), lambda};
}

py::dict metrics_dict(const MetricsRecord& r) {
    py::dict d;
    d["iteration"] = r.iteration;
    d["wall_time_ms"] = r.wall_time_ms;
    d["train_loss"] = r.train_loss;
    d["test_error"] = r.test_error;
    d["variance_estimate"] = r.variance_estimate ? py::cast(*r.variance_estimate) : py::none();
    d["algorithm"] = r.algorithm;
    d["seed"] = r.seed;
    return d;
}

}  // namespace

PYBIND11_MODULE(_assgd, m) {
    m.doc() = "Active Sampler SGD core bindings.";

    // Translators run newest first, so the base class goes first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&dataset_from_arrays), py::arg("x"), py::arg("y"), py::arg("multiclass") = false,
             py::arg("num_classes") = 0, "Dense dataset from an (n, d) array and integer labels.")
        .def("__len__", &Dataset::size)
        .def_property_readonly("dimension", &Dataset::dimension)
        .def_property_readonly("num_classes", &Dataset::num_classes)
        .def_property_readonly("is_binary", &Dataset::is_binary)
        .def("features", &dataset_features, "Dense (n, d) copy of the features.")
        .def("labels", [](const Dataset& d) {
            std::vector<int> y;
            for (const auto& inst : d.instances()) y.push_back(inst.label);
            return y;
        })
        .def("subset", [](const Dataset& d, const std::vector<std::size_t>& ids) { return d.subset(ids); });

    m.def("synth_biased",
          [](std::size_t n, std::size_t dim, double easy, double margin, std::uint64_t seed) {
              return synth_biased({n, dim, easy, margin, seed});
          },
          py::arg("n"), py::arg("dim"), py::arg("easy_fraction") = 0.9, py::arg("margin") = 1.0, py::arg("seed") = 0);
    m.def("load_libsvm", [](const std::string& path) { return load_libsvm(path); }, py::arg("path"));

    py::class_<ModelParams>(m, "ModelParams")
        .def_static("linear", &ModelParams::linear, py::arg("dimension"), py::arg("outputs") = 1)
        .def_static("mlp",
                    [](const std::vector<std::size_t>& widths, const std::string& hidden, std::uint64_t seed,
                       double scale) {
                        auto p = ModelParams::mlp(widths, parse_activation(hidden));
                        Rng rng(seed);
                        p.randomize(rng, scale);
                        return p;
                    },
                    py::arg("widths"), py::arg("hidden") = "sigmoid", py::arg("seed") = 0, py::arg("scale") = 1.0)
        .def_property_readonly("parameter_count", &ModelParams::parameter_count)
        .def("flatten", &ModelParams::flatten)
        .def("assign_flat", &ModelParams::assign_flat)
        .def("copy", [](const ModelParams& p) { return p; });

    m.def("predict",
          [](const ModelParams& p, const std::vector<double>& x) { return predict(p, FeatureVector::dense(x)); });

    m.def("batch_backward",
          [](const ModelParams& p, const Dataset& d, const std::vector<std::size_t>& ids,
             std::optional<std::vector<double>> weights, const std::string& loss, const std::string& regularizer,
             double lambda) {
              std::vector<WeightedInstance> batch;
              for (std::size_t k = 0; k < ids.size(); ++k) {
                  if (ids[k] >= d.size()) throw ArgumentError("instance id out of range");
                  batch.push_back({&d[ids[k]], weights ? weights->at(k) : 1.0});
              }
              auto r = batch_backward(p, batch, loss_spec(loss, regularizer, lambda));
              return py::make_tuple(r.avg_gradient.flatten(), r.per_sample_grad_norms, r.per_sample_losses);
          },
          py::arg("params"), py::arg("data"), py::arg("ids"), py::arg("weights") = py::none(),
          py::arg("loss") = "logistic", py::arg("regularizer") = "none", py::arg("lam") = 0.0,
          "Returns (average gradient, per-sample gradient norms, per-sample losses).");

    m.def("grad_norm_explicit",
          [](const ModelParams& p, const Dataset& d, std::size_t id, const std::string& loss) {
              return grad_norm_explicit(p, d[id], loss_spec(loss, "none", 0.0));
          },
          py::arg("params"), py::arg("data"), py::arg("id"), py::arg("loss") = "logistic");

    m.def("full_gradient",
          [](const ModelParams& p, const Dataset& d, const std::string& loss) {
              return full_gradient(p, d, loss_spec(loss, "none", 0.0)).flatten();
          },
          py::arg("params"), py::arg("data"), py::arg("loss") = "logistic");

    m.def("per_instance_grad_norms",
          [](const ModelParams& p, const Dataset& d, const std::string& loss) {
              return per_instance_grad_norms(p, d, loss_spec(loss, "none", 0.0));
          },
          py::arg("params"), py::arg("data"), py::arg("loss") = "logistic");

    m.def("optimal_distribution",
          [](const std::vector<double>& norms) { return optimal_distribution(norms); }, py::arg("grad_norms"));

    m.def("variance",
          [](const ModelParams& p, const Dataset& d, const std::vector<double>& probs, std::size_t b,
             const std::string& loss) { return variance(p, d, loss_spec(loss, "none", 0.0), probs, b).variance; },
          py::arg("params"), py::arg("data"), py::arg("probs"), py::arg("batch_size") = 1,
          py::arg("loss") = "logistic");

    py::class_<WeightIndex>(m, "WeightIndex")
        .def(py::init<std::vector<double>, double>(), py::arg("weights"), py::arg("beta") = 0.1)
        .def("__len__", &WeightIndex::size)
        .def_property_readonly("total", &WeightIndex::total)
        .def("probability", &WeightIndex::probability)
        .def("probabilities", &WeightIndex::probabilities)
        .def("importance_weight", &WeightIndex::importance_weight)
        .def("sample_with", &WeightIndex::sample_with, py::arg("u"))
        .def("draw_batch",
             [](const WeightIndex& w, std::size_t b, std::uint64_t seed) {
                 Rng rng(seed);
                 return w.draw_batch(b, rng);
             },
             py::arg("b"), py::arg("seed") = 0)
        .def("update", &WeightIndex::update, py::arg("id"), py::arg("weight"));

    m.def("stage_subset",
          [](std::size_t n, std::size_t mm, std::uint64_t seed) {
              Rng rng(seed);
              return stage_subset(n, mm, rng);
          },
          py::arg("n"), py::arg("m"), py::arg("seed") = 0);

    m.def("train",
          [](const Dataset& d, const std::string& algorithm, double eta, std::size_t batch_size,
             std::size_t iterations, double beta, std::uint64_t seed, std::size_t eval_every,
             const std::string& loss, const std::string& regularizer, double lambda, double lr_decay,
             std::size_t stage_m, std::size_t stage_g, double gamma) {
              TrainConfig c;
              c.algorithm = parse_algorithm(algorithm);
              c.eta = eta;
              c.batch_size = batch_size;
              c.iterations = iterations;
              c.beta = beta;
              c.seed = seed;
              c.eval_every = eval_every;
              c.loss = loss_spec(loss, regularizer, lambda);
              c.lr_decay = lr_decay;
              c.stage.m = stage_m;
              c.stage.g = stage_g;
              c.stage.gamma = gamma;
              TrainedModel r;
              {
                  py::gil_scoped_release release;
                  r = train(d, c);
              }
              py::list rows;
              for (const auto& rec : r.metrics) rows.append(metrics_dict(rec));
              return py::make_tuple(r.params, rows);
          },
          py::arg("data"), py::arg("algorithm") = "assgd", py::arg("eta") = 0.1, py::arg("batch_size") = 128,
          py::arg("iterations") = 1000, py::arg("beta") = 0.1, py::arg("seed") = 0, py::arg("eval_every") = 100,
          py::arg("loss") = "logistic", py::arg("regularizer") = "none", py::arg("lam") = 0.0,
          py::arg("lr_decay") = 0.0, py::arg("stage_m") = 0, py::arg("stage_g") = 0, py::arg("gamma") = 1e-3,
          "Trains a linear model; returns (params, metric rows).");

    m.def("check",
          [](const std::string& suite, std::uint64_t seed) {
              std::vector<CheckResult> r;
              if (suite == "grad") r = check_gradients(seed);
              else if (suite == "variance") r = check_variance(seed, 20, 1000);
              else if (suite == "sampler") r = check_sampler(seed);
              else throw ArgumentError("suite must be grad, variance or sampler");
              py::list out;
              for (const auto& c : r) out.append(py::make_tuple(c.name, c.passed, c.measured, c.tolerance));
              return out;
          },
          py::arg("suite"), py::arg("seed") = 1);
}
