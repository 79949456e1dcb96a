#include "rfps/screening.hpp"
#include "rfps/error.hpp"
#include "rfps/parallel.hpp"
#include "rfps/rng.hpp"

#include "linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rfps {

namespace {

constexpr std::uint64_t kResponseStream = 0x52455350;  // "RESP"
constexpr std::uint64_t kMarginalStream = 0x4D415247;  // "MARG"

std::shared_ptr<const Matrix> share(Matrix m) { return std::make_shared<const Matrix>(std::move(m)); }

// A column counts as constant when its squared norm is zero or, after
// profiling, has fallen below 1e-20 of the squared norm of `reference`.
Vector marginal_ls_slopes(const Matrix& x, const Vector& y, std::vector<std::string>* warnings,
                          const Matrix* reference = nullptr) {
  Vector slopes(x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double ss = x.col(j).squaredNorm();
    const double floor = reference ? 1e-20 * reference->col(j).squaredNorm() : 0.0;
    if (!(ss > floor)) {
      if (!warnings) throw Error(ErrorCode::ZeroVarianceColumn, "column " + std::to_string(j) + " has zero variance");
      warnings->push_back("column " + std::to_string(j) + " has zero variance; slope set to 0");
      slopes(j) = 0.0;
      continue;
    }
    slopes(j) = x.col(j).dot(y) / ss;
  }
  return slopes;
}

double fpsis_pc(const Vector& eigenvalues, double total, Index d, Index n, Index p) {
  double resid = total;
  for (Index k = 0; k < d; ++k) resid -= eigenvalues(k);
  resid = std::max(resid, 0.0);
  const double np = static_cast<double>(n) * static_cast<double>(p);
  const double npp = static_cast<double>(n + p);
  return resid / np + total / np * static_cast<double>(d) * (npp / np) * std::log(np / npp);
}

}  // namespace

const char* to_string(ScreeningMethod method) {
  switch (method) {
    case ScreeningMethod::Sis: return "sis";
    case ScreeningMethod::Fpsis: return "fpsis";
    case ScreeningMethod::Rfpsis: return "rfpsis";
  }
  return "unknown";
}

const char* to_string(ObservationLabel label) {
  switch (label) {
    case ObservationLabel::Regular: return "regular";
    case ObservationLabel::Lmv: return "lmv";
    case ObservationLabel::PcGoodLeverage: return "pc_good_leverage";
    case ObservationLabel::PcBadLeverage: return "pc_bad_leverage";
    case ObservationLabel::OcOutlier: return "oc";
  }
  return "unknown";
}

ScreeningMethod parse_method(const std::string& name) {
  if (name == "sis") return ScreeningMethod::Sis;
  if (name == "fpsis") return ScreeningMethod::Fpsis;
  if (name == "rfpsis") return ScreeningMethod::Rfpsis;
  throw Error(ErrorCode::Parse, "unknown screening method '" + name + "'");
}

Matrix standardize_columns(const Matrix& x, ScaleEstimator estimator, std::vector<RobustScale>* scales) {
  Matrix out(x.rows(), x.cols());
  if (scales) scales->assign(static_cast<std::size_t>(x.cols()), {});
  for (Index j = 0; j < x.cols(); ++j) {
    const Vector col = x.col(j);
    RobustScale s = location_scale(as_span(col), estimator);
    if (!(s.scale > 0.0) && estimator == ScaleEstimator::MedianQn) {
      const RobustScale sd = location_scale(as_span(col), ScaleEstimator::MeanSd);
      s.scale = sd.scale;
    }
    if (s.scale > 0.0) {
      out.col(j) = (col.array() - s.location) / s.scale;
    } else {
      out.col(j).setZero();
    }
    if (scales) (*scales)[static_cast<std::size_t>(j)] = s;
  }
  return out;
}

std::vector<Index> order_by_magnitude(const Vector& values) {
  std::vector<Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(values(a)) > std::abs(values(b)); });
  return order;
}

SolutionPath sis_path(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw Error(ErrorCode::PreconditionViolated, "X and y have different row counts");
  SolutionPath path;
  path.method = ScreeningMethod::Sis;
  path.slopes = marginal_ls_slopes(x, y, nullptr);
  path.order = order_by_magnitude(path.slopes);
  path.i1 = all_indices(x.rows());
  path.i2 = path.i1;
  path.profiled_y = y;
  path.profiled_x = share(x);
  return path;
}

SolutionPath fpsis_path(const Matrix& x, const Vector& y, std::optional<Index> d, Index d_max) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n != y.size()) throw Error(ErrorCode::PreconditionViolated, "X and y have different row counts");
  if (d && *d == 0) {
    SolutionPath path = sis_path(x, y);
    path.method = ScreeningMethod::Fpsis;
    return path;
  }
  const Index d_top = d ? *d : d_max;
  if (d_top < 1 || d_top > std::min(n, p) - 1)
    throw Error(ErrorCode::PreconditionViolated, "factor dimension out of range for FPSIS");

  const Matrix gram = x * x.transpose();
  const linalg::EigenPairs eig = linalg::top_eigenpairs(gram, d_top);
  Index chosen = d_top;
  if (!d) {
    const double total = x.squaredNorm();
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 1; k <= d_max; ++k) {
      const double value = fpsis_pc(eig.values, total, k, n, p);
      if (value < best) {
        best = value;
        chosen = k;
      }
    }
  }
  const Matrix z = eig.vectors.leftCols(chosen);

  SolutionPath path;
  path.method = ScreeningMethod::Fpsis;
  path.d = chosen;
  Matrix profiled = x - z * (z.transpose() * x);
  path.profiled_y = y - z * (z.transpose() * y);
  path.slopes = marginal_ls_slopes(profiled, path.profiled_y, &path.warnings, &x);
  path.order = order_by_magnitude(path.slopes);
  path.i1 = all_indices(n);
  path.i2 = path.i1;
  path.profiled_x = share(std::move(profiled));
  return path;
}

ResponseProfile profile_response(const Vector& y, const FactorFit& fit, std::uint64_t seed) {
  const Index n = fit.Z.rows();
  const Index d = fit.d;
  if (y.size() != n) throw Error(ErrorCode::PreconditionViolated, "response length does not match the factor fit");

  ResponseProfile out;
  out.i1 = fit.rows_with(ObservationFlag::Regular);
  if (static_cast<Index>(out.i1.size()) < 2 * (d + 1))
    throw Error(ErrorCode::TooFewRegularRows, "fewer than 2(d+1) regular rows for the response fit");

  SOptions sopt;
  sopt.seed = stream_key(seed, kResponseStream, 0);
  out.initial_fit = mm_estimator(select_rows(fit.Z, out.i1), select_rows(y, out.i1), sopt);

  const Vector r0 = out.initial_fit.residuals(fit.Z, y);
  Vector t(n);
  for (Index i = 0; i < n; ++i) {
    if (out.initial_fit.scale > 0.0) {
      t(i) = r0(i) / out.initial_fit.scale;
    } else {
      t(i) = r0(i) == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r0(i));
    }
  }
  const double cut = chi2_quantile(0.975, 1);

  std::vector<ObservationLabel> labels(static_cast<std::size_t>(n), ObservationLabel::Regular);
  out.i2 = out.i1;
  for (Index i = 0; i < n; ++i) {
    const auto flag = fit.flags[static_cast<std::size_t>(i)];
    auto& label = labels[static_cast<std::size_t>(i)];
    if (flag == ObservationFlag::OcOutlier) {
      label = ObservationLabel::OcOutlier;
    } else if (flag == ObservationFlag::PcOutlier) {
      if (t(i) * t(i) <= cut) {
        label = ObservationLabel::PcGoodLeverage;
        out.i2.push_back(i);
      } else {
        label = ObservationLabel::PcBadLeverage;
      }
    } else if (t(i) * t(i) > cut) {
      label = ObservationLabel::Lmv;
    }
  }
  std::sort(out.i2.begin(), out.i2.end());

  if (out.i2.size() == out.i1.size()) {
    out.fit = out.initial_fit;
  } else {
    out.fit = mm_estimator(select_rows(fit.Z, out.i2), select_rows(y, out.i2), sopt);
  }
  out.gamma = out.fit.slopes;
  out.mu_y = out.fit.intercept;
  out.profiled_y = out.fit.residuals(fit.Z, y);
  out.report.labels = std::move(labels);
  out.report.od = fit.od;
  out.report.sd = fit.sd;
  out.report.t = t;
  return out;
}

SolutionPath rfpsis_path(const Matrix& x, const Vector& y, const RfpsisOptions& options) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n != y.size()) throw Error(ErrorCode::PreconditionViolated, "X and y have different row counts");

  SolutionPath path;
  path.method = ScreeningMethod::Rfpsis;

  const Matrix xs = standardize_columns(x, ScaleEstimator::MedianQn);
  FactorOptions fopt = options.factor;
  fopt.seed = options.seed;
  fopt.threads = options.threads;
  FactorFit factor = fit_factor_model(xs, fopt);

  Matrix profiled = (xs.rowwise() - factor.mu.transpose()) - factor.Z * factor.B.transpose();
  ResponseProfile response = profile_response(y, factor, options.seed);

  const Vector y2 = select_rows(response.profiled_y, response.i2);
  const auto m = static_cast<Index>(response.i2.size());
  path.slopes = Vector::Zero(p);
  std::vector<std::string> column_warnings(static_cast<std::size_t>(p));
  parallel_for(static_cast<std::size_t>(p), options.threads, [&](std::size_t jj) {
    const auto j = static_cast<Index>(jj);
    Vector xj(m);
    for (Index i = 0; i < m; ++i) xj(i) = profiled(response.i2[static_cast<std::size_t>(i)], j);
    if (xj.maxCoeff() == xj.minCoeff()) {
      column_warnings[jj] = "column " + std::to_string(j) + " has zero variance; slope set to 0";
      return;
    }
    SOptions sopt;
    sopt.n_starts = options.marginal_starts;
    sopt.seed = stream_key(options.seed, kMarginalStream, jj);
    try {
      path.slopes(j) = mm_simple(xj, y2, sopt).slopes(0);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficientWeighted && e.code() != ErrorCode::NoValidStart) throw;
      column_warnings[jj] = "column " + std::to_string(j) + ": " + e.what() + "; slope set to 0";
    }
  });
  for (auto& w : column_warnings)
    if (!w.empty()) path.warnings.push_back(std::move(w));

  path.order = order_by_magnitude(path.slopes);
  path.d = factor.d;
  path.i1 = response.i1;
  path.i2 = response.i2;
  path.profiled_y = response.profiled_y;
  path.profiled_x = share(std::move(profiled));
  path.report = std::move(response.report);
  path.factor = std::move(factor);
  return path;
}

SolutionPath screen(const Matrix& x, const Vector& y, const ScreeningOptions& options) {
  if (options.method == ScreeningMethod::Rfpsis) {
    RfpsisOptions ropt;
    ropt.factor.d = options.d;
    ropt.factor.d_max = options.d_max;
    ropt.factor.h_frac = options.h_frac;
    ropt.seed = options.seed;
    ropt.threads = options.threads;
    return rfpsis_path(x, y, ropt);
  }
  const Matrix xs = standardize_columns(x, ScaleEstimator::MeanSd);
  const Vector yc = y.array() - y.mean();
  if (options.method == ScreeningMethod::Sis) return sis_path(xs, yc);
  return fpsis_path(xs, yc, options.d, options.d_max);
}

}  // namespace rfps
