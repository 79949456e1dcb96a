#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rfps/error.hpp"
#include "rfps/factor_model.hpp"
#include "rfps/model_selection.hpp"
#include "rfps/regression.hpp"
#include "rfps/robust_stats.hpp"
#include "rfps/screening.hpp"
#include "rfps/simulation.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace rfps;

namespace {

template <class E>
std::vector<std::string> names(const std::vector<E>& values) {
  std::vector<std::string> out;
  out.reserve(values.size());
  for (E v : values) out.emplace_back(to_string(v));
  return out;
}

py::dict regression_dict(const RegressionFit& f) {
  py::dict d;
  d["intercept"] = f.intercept;
  d["slopes"] = f.slopes;
  d["scale"] = f.scale;
  d["weights"] = f.weights;
  d["iterations"] = f.iterations;
  d["converged"] = f.converged;
  return d;
}

py::dict factor_dict(const FactorFit& f) {
  py::dict d;
  d["d"] = f.d;
  d["h"] = f.h;
  d["mu"] = f.mu;
  d["B"] = f.B;
  d["Z"] = f.Z;
  d["od"] = f.od;
  d["sd"] = f.sd;
  d["flags"] = names(f.flags);
  d["lambda_opt"] = f.lambda_opt;
  d["od_cutoff"] = f.od_cutoff;
  d["sd_cutoff"] = f.sd_cutoff;
  d["pc_criterion"] = f.pc_criterion;
  return d;
}

py::dict path_dict(const SolutionPath& path) {
  py::dict d;
  d["method"] = to_string(path.method);
  d["order"] = path.order;
  d["slopes"] = path.slopes;
  d["d"] = path.d;
  d["i1"] = path.i1;
  d["i2"] = path.i2;
  d["warnings"] = path.warnings;
  if (path.report) d["labels"] = names(path.report->labels);
  if (path.factor) d["factor"] = factor_dict(*path.factor);
  return d;
}

ScreeningOptions screening_options(const std::string& method, std::optional<Index> d, Index d_max, double h_frac,
                                   std::uint64_t seed, int threads) {
  ScreeningOptions o;
  o.method = parse_method(method);
  o.d = d;
  o.d_max = d_max;
  o.h_frac = h_frac;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust factor profiled sure independence screening";

  py::register_exception<Error>(m, "RfpsError", PyExc_ValueError);

  m.def("median", [](const Vector& x) { return median(as_span(x)); }, py::arg("x"));
  m.def("qn_scale", [](const Vector& x) { return qn_scale(as_span(x)); }, py::arg("x"));
  m.def(
      "mscale", [](const Vector& r, double c, double delta) { return mscale(as_span(r), c, delta); },
      py::arg("residuals"), py::arg("c") = kBreakdownTuning, py::arg("delta") = kBreakdownDelta);
  m.def("bisquare_rho", &bisquare_rho, py::arg("u"), py::arg("c"));
  m.def("bisquare_psi", &bisquare_psi, py::arg("u"), py::arg("c"));

  m.def(
      "mm_estimator",
      [](const Matrix& x, const Vector& y, std::uint64_t seed) {
        return regression_dict(mm_estimator(x, y, SOptions{.seed = seed}));
      },
      py::arg("x"), py::arg("y"), py::arg("seed") = 0);

  m.def(
      "fit_factor_model",
      [](const Matrix& x, std::optional<Index> d, Index d_max, double h_frac, std::uint64_t seed, int threads,
         bool standardize) {
        FactorOptions o;
        o.d = d;
        o.d_max = d_max;
        o.h_frac = h_frac;
        o.seed = seed;
        o.threads = threads;
        const Matrix xs = standardize ? standardize_columns(x, ScaleEstimator::MedianQn) : x;
        return factor_dict(fit_factor_model(xs, o));
      },
      py::arg("x"), py::arg("d") = py::none(), py::arg("d_max") = 10, py::arg("h_frac") = 0.0, py::arg("seed") = 0,
      py::arg("threads") = 1, py::arg("standardize") = true);

  m.def(
      "screen",
      [](const Matrix& x, const Vector& y, const std::string& method, std::optional<Index> d, Index d_max,
         double h_frac, std::uint64_t seed, int threads) {
        return path_dict(screen(x, y, screening_options(method, d, d_max, h_frac, seed, threads)));
      },
      py::arg("x"), py::arg("y"), py::arg("method") = "rfpsis", py::arg("d") = py::none(), py::arg("d_max") = 10,
      py::arg("h_frac") = 0.0, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "select",
      [](const Matrix& x, const Vector& y, const std::vector<std::string>& criteria, std::optional<Index> k_max,
         const std::string& method, std::optional<Index> d, Index d_max, std::uint64_t seed, int threads) {
        const SolutionPath path = screen(x, y, screening_options(method, d, d_max, 0.0, seed, threads));
        const Index n = x.rows();
        const Index p = x.cols();
        const Index usable = std::min(static_cast<Index>(path.i2.size()) / 2, p);
        const PathRefits refits = refit_path(path, k_max ? *k_max : std::min(default_k_max(n, p), usable), seed);
        py::dict out;
        for (const auto& name : criteria) {
          const CriterionValue v = select_model(path, refits, parse_criterion(name), n, p);
          py::dict d;
          d["model"] = v.model;
          d["coefficients"] = v.coefs;
          d["intercept"] = v.intercept;
          d["value"] = v.value;
          d["wrss"] = v.wrss;
          out[py::str(name)] = d;
        }
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("criteria") = std::vector<std::string>{"R-EBIC"},
      py::arg("k_max") = py::none(), py::arg("method") = "rfpsis", py::arg("d") = py::none(), py::arg("d_max") = 10,
      py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "generate",
      [](Index n, Index p, Index d, double c, double eps_leverage, double eps_vertical, const std::string& leverage,
         Index m_true, std::uint64_t seed, std::uint64_t replicate) {
        SimulationSpec s;
        s.n = n;
        s.p = p;
        s.d = d;
        s.c = c;
        s.eps_leverage = eps_leverage;
        s.eps_vertical = eps_vertical;
        s.leverage_kind = parse_leverage_kind(leverage);
        s.m_true = m_true;
        s.seed = seed;
        const SimulatedDataset data = generate(s, replicate);
        py::dict out;
        out["X"] = data.X;
        out["y"] = data.y;
        out["theta0"] = data.theta0;
        out["true_model"] = data.true_model;
        out["labels"] = names(data.labels);
        return out;
      },
      py::arg("n") = 200, py::arg("p") = 1000, py::arg("d") = 2, py::arg("c") = 5.0, py::arg("eps_leverage") = 0.0,
      py::arg("eps_vertical") = 0.0, py::arg("leverage") = "none", py::arg("m_true") = 8, py::arg("seed") = 0,
      py::arg("replicate") = 0);

  m.def(
      "minimal_model_size",
      [](const std::vector<Index>& order, IndexSet true_model) {
        std::sort(true_model.begin(), true_model.end());
        return minimal_model_size(order, true_model);
      },
      py::arg("order"), py::arg("true_model"));
}
