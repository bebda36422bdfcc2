#include "vcdd/bounds.hpp"
#include "vcdd/data.hpp"
#include "vcdd/experiments.hpp"
#include "vcdd/features.hpp"
#include "vcdd/solvers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

namespace {

py::dict row_dict(const vcdd::SweepRow& r) {
  py::dict d;
  d["axis"] = r.axis_value;
  d["seed"] = r.seed;
  d["n_train"] = r.n_train;
  d["width"] = r.width;
  d["train_error"] = r.train_error;
  d["test_error"] = r.test_error;
  d["norm_sq"] = r.norm_sq;
  d["h"] = r.h;
  d["bound"] = r.bound;
  d["eta"] = r.eta;
  d["n_support"] = r.n_support;
  d["interpolating"] = r.interpolating;
  d["flags"] = r.flags;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vcdd, m) {
  m.doc() = "VC generalization bounds, random-feature learners and sweeps";
  m.attr("__version__") = VCDD_VERSION;

  py::register_exception<vcdd::DomainError>(m, "DomainError", PyExc_ValueError);

  py::class_<vcdd::BoundResult>(m, "BoundResult")
      .def_readonly("eta", &vcdd::BoundResult::eta)
      .def_readonly("epsilon", &vcdd::BoundResult::epsilon)
      .def_readonly("bound", &vcdd::BoundResult::bound)
      .def("__repr__", [](const vcdd::BoundResult& r) {
        return "BoundResult(eta=" + std::to_string(r.eta) + ", epsilon=" + std::to_string(r.epsilon) +
               ", bound=" + std::to_string(r.bound) + ")";
      });

  m.def("confidence_eta", &vcdd::confidence_eta, py::arg("n"));
  m.def("epsilon", &vcdd::epsilon, py::arg("n"), py::arg("h"), py::arg("a1") = 1.0, py::arg("a2") = 1.0);
  m.def(
      "vc_bound",
      [](std::uint64_t n, double h, double r_trn, double a1, double a2, const std::string& variant) {
        return vcdd::evaluate_bound(vcdd::parse_bound_variant(variant), {n, h, r_trn, a1, a2});
      },
      py::arg("n"), py::arg("h"), py::arg("r_trn") = 0.0, py::arg("a1") = 1.0, py::arg("a2") = 1.0,
      py::arg("variant") = "eq1");
  m.def("second_descent_bound", &vcdd::second_descent_bound, py::arg("n"), py::arg("h"));
  m.def("linear_vc_dim", &vcdd::linear_vc_dim, py::arg("norm_sq"), py::arg("n_features"));

  m.def(
      "relu_features",
      [](const vcdd::Matrix& x, vcdd::Index n_features, std::uint64_t seed) {
        return vcdd::apply_features(vcdd::sample_relu_map(x.cols(), n_features, seed), x);
      },
      py::arg("x"), py::arg("n_features"), py::arg("seed") = 0);
  m.def(
      "rff_features",
      [](const vcdd::Matrix& x, vcdd::Index n_features, double sigma, std::uint64_t seed) {
        return vcdd::apply_features(vcdd::sample_rff_map(x.cols(), n_features, sigma, seed), x);
      },
      py::arg("x"), py::arg("n_features"), py::arg("sigma") = vcdd::kDefaultRffSigma, py::arg("seed") = 0);

  m.def(
      "fit_min_norm_ls",
      [](const vcdd::Matrix& z, const vcdd::Vector& y, bool fit_bias) {
        vcdd::LsOptions o;
        o.fit_bias = fit_bias;
        const auto model = vcdd::fit_min_norm_ls(z, y, o);
        return py::make_tuple(model.w(), model.b(), model.meta().residual, model.meta().rank);
      },
      py::arg("z"), py::arg("y"), py::arg("fit_bias") = true,
      "Returns (w, b, relative residual, numerical rank).");

  py::class_<vcdd::SvmFit>(m, "SvmResult")
      .def_property_readonly("w", [](const vcdd::SvmFit& f) { return f.model.w(); })
      .def_property_readonly("b", [](const vcdd::SvmFit& f) { return f.model.b(); })
      .def_readonly("alphas", &vcdd::SvmFit::alphas)
      .def_readonly("n_support", &vcdd::SvmFit::n_support)
      .def_property_readonly("converged", [](const vcdd::SvmFit& f) { return f.model.meta().converged; })
      .def_property_readonly("duality_gap", [](const vcdd::SvmFit& f) { return f.model.meta().duality_gap; });
  m.def(
      "fit_linear_svm",
      [](const vcdd::Matrix& z, const vcdd::Vector& y, double c) {
        vcdd::SvmOptions o;
        o.C = c;
        return vcdd::fit_linear_svm(z, y, o);
      },
      py::arg("z"), py::arg("y"), py::arg("c") = vcdd::kDefaultSvmC);

  m.def(
      "synth_gaussians",
      [](vcdd::Index d, vcdd::Index n_train, vcdd::Index n_test, double separation, std::uint64_t seed) {
        const auto ds = vcdd::synth_gaussians(d, n_train, n_test, separation, seed);
        return py::make_tuple(ds.x_train, ds.y_train, ds.x_test, ds.y_test);
      },
      py::arg("d"), py::arg("n_train"), py::arg("n_test"), py::arg("separation") = 2.0, py::arg("seed") = 0,
      "Returns (x_train, y_train, x_test, y_test).");

  m.def(
      "sweep_width",
      [](const vcdd::Matrix& x_train, const vcdd::Vector& y_train, const vcdd::Matrix& x_test,
         const vcdd::Vector& y_test, const std::vector<vcdd::Index>& grid, const std::string& learner,
         const std::string& features, std::vector<std::uint64_t> seeds, double a1, double a2) {
        vcdd::BinaryDataset ds;
        ds.x_train = x_train;
        ds.y_train = y_train;
        ds.x_test = x_test;
        ds.y_test = y_test;
        vcdd::SweepConfig cfg;
        cfg.grid = grid;
        cfg.learner = vcdd::parse_learner(learner);
        cfg.features = vcdd::parse_feature_kind(features);
        cfg.seeds = std::move(seeds);
        cfg.constants = {a1, a2};
        cfg.workers = 1;
        vcdd::SweepResult res;
        {
          py::gil_scoped_release release;
          res = vcdd::sweep_width(ds, cfg);
        }
        py::list rows;
        for (const auto& r : res.rows) rows.append(row_dict(r));
        const auto t = vcdd::interpolation_threshold(res);
        return py::make_tuple(rows, t ? py::cast(*t) : py::none());
      },
      py::arg("x_train"), py::arg("y_train"), py::arg("x_test"), py::arg("y_test"), py::arg("grid"),
      py::arg("learner") = "ls", py::arg("features") = "relu", py::arg("seeds") = std::vector<std::uint64_t>{0},
      py::arg("a1") = 1.0, py::arg("a2") = 1.0, "Returns (rows, interpolation threshold or None).");
}
