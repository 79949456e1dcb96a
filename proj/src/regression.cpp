#include "rfps/regression.hpp"
#include "rfps/error.hpp"
#include "rfps/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfps {

namespace {

constexpr std::uint64_t kSStream = 0x53455354;  // "SEST"

// Design policies. Coefficients are (intercept, slopes).

class GeneralDesign {
 public:
  explicit GeneralDesign(const Matrix& x) : a_(x.rows(), x.cols() + 1) {
    a_.col(0).setOnes();
    a_.rightCols(x.cols()) = x;
  }
  Index n() const { return a_.rows(); }
  Index k() const { return a_.cols() - 1; }

  bool elemental(const IndexSet& rows, const Vector& y, Vector& coef) const {
    const auto m = static_cast<Index>(rows.size());
    Matrix sub(m, a_.cols());
    Vector rhs(m);
    for (Index i = 0; i < m; ++i) {
      sub.row(i) = a_.row(rows[static_cast<std::size_t>(i)]);
      rhs(i) = y(rows[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Matrix> lu(sub);
    if (lu.rank() < a_.cols()) return false;
    coef = lu.solve(rhs);
    return coef.allFinite();
  }

  bool wls(const Vector& w, const Vector& y, Vector& coef) const {
    const Matrix wa = w.asDiagonal() * a_;
    const Matrix m = a_.transpose() * wa;
    Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success) return false;
    const Vector diag = ldlt.vectorD().cwiseAbs();
    if (!(diag.minCoeff() > 1e-12 * diag.maxCoeff())) return false;
    coef = ldlt.solve(wa.transpose() * y);
    return coef.allFinite();
  }

  void residuals(const Vector& coef, const Vector& y, Vector& r) const { r = y - a_ * coef; }

 private:
  Matrix a_;
};

class SimpleDesign {
 public:
  explicit SimpleDesign(const Vector& x) : x_(x) {}
  Index n() const { return x_.size(); }
  Index k() const { return 1; }

  bool elemental(const IndexSet& rows, const Vector& y, Vector& coef) const {
    const Index i = rows[0];
    const Index j = rows[1];
    const double dx = x_(j) - x_(i);
    if (dx == 0.0) return false;
    coef.resize(2);
    coef(1) = (y(j) - y(i)) / dx;
    coef(0) = y(i) - coef(1) * x_(i);
    return std::isfinite(coef(0)) && std::isfinite(coef(1));
  }

  bool wls(const Vector& w, const Vector& y, Vector& coef) const {
    const double sw = w.sum();
    if (!(sw > 0.0)) return false;
    const double xm = w.dot(x_) / sw;
    const double ym = w.dot(y) / sw;
    double sxx = 0.0;
    double sxy = 0.0;
    double sx2 = 0.0;
    for (Index i = 0; i < x_.size(); ++i) {
      const double dx = x_(i) - xm;
      sxx += w(i) * dx * dx;
      sxy += w(i) * dx * (y(i) - ym);
      sx2 += w(i) * x_(i) * x_(i);
    }
    if (!(sxx > 1e-12 * sx2)) return false;
    coef.resize(2);
    coef(1) = sxy / sxx;
    coef(0) = ym - coef(1) * xm;
    return true;
  }

  void residuals(const Vector& coef, const Vector& y, Vector& r) const {
    r = (y.array() - coef(0) - coef(1) * x_.array()).matrix();
  }

 private:
  const Vector& x_;
};

class LocationDesign {
 public:
  explicit LocationDesign(Index n) : n_(n) {}
  Index n() const { return n_; }
  Index k() const { return 0; }

  bool elemental(const IndexSet& rows, const Vector& y, Vector& coef) const {
    coef = Vector::Constant(1, y(rows[0]));
    return true;
  }

  bool wls(const Vector& w, const Vector& y, Vector& coef) const {
    const double sw = w.sum();
    if (!(sw > 0.0)) return false;
    coef = Vector::Constant(1, w.dot(y) / sw);
    return true;
  }

  void residuals(const Vector& coef, const Vector& y, Vector& r) const { r = y.array() - coef(0); }

 private:
  Index n_;
};

Vector bisquare_weights(const Vector& r, double scale, double c) {
  Vector w(r.size());
  for (Index i = 0; i < r.size(); ++i) w(i) = bisquare_weight(r(i) / scale, c);
  return w;
}

double mean_rho(const Vector& r, double scale, double c) {
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i) acc += bisquare_rho(r(i) / scale, c);
  return acc / static_cast<double>(r.size());
}

double sum_rho(const Vector& r, double scale, double c) { return mean_rho(r, scale, c) * static_cast<double>(r.size()); }

double median_abs(const Vector& r) {
  const Vector a = r.cwiseAbs();
  return median(as_span(a));
}

RegressionFit make_fit(const Vector& coef, double scale, const Vector& r, double c) {
  RegressionFit fit;
  fit.intercept = coef(0);
  fit.slopes = coef.tail(coef.size() - 1);
  fit.scale = scale;
  fit.tuning = c;
  if (scale > 0.0) {
    fit.weights = bisquare_weights(r, scale, c);
  } else {
    fit.weights = (r.array() == 0.0).cast<double>();
  }
  return fit;
}

struct SCandidate {
  Vector coef;
  double scale = 0.0;
  int start = 0;
};

bool candidate_less(const SCandidate& a, const SCandidate& b) {
  return a.scale != b.scale ? a.scale < b.scale : a.start < b.start;
}

template <class Design>
RegressionFit s_fit(const Design& design, const Vector& y, const SOptions& options) {
  const Index n = design.n();
  const Index k = design.k();
  if (y.size() != n) throw Error(ErrorCode::PreconditionViolated, "response length does not match the design");
  if (n < 2 * (k + 1)) throw Error(ErrorCode::InsufficientData, "S-estimator needs n >= 2(k+1)");
  const int n_starts = options.n_starts > 0 ? options.n_starts : (k <= 1 ? 50 : 500);
  const double c0 = kBreakdownTuning;
  const double delta = kBreakdownDelta;
  const auto one_step = [&](const Vector& r, double s) { return s * std::sqrt(mean_rho(r, s, c0) / delta); };

  std::vector<SCandidate> best;
  Vector coef;
  Vector next;
  Vector r;
  bool exact = false;
  for (int s = 0; s < n_starts && !exact; ++s) {
    CounterRng rng(options.seed, kSStream, static_cast<std::uint64_t>(s));
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) ok = design.elemental(sample_indices(rng, n, k + 1), y, coef);
    if (!ok) continue;
    design.residuals(coef, y, r);

    double sc = median_abs(r) / 0.6745;
    if (sc == 0.0) sc = mscale(as_span(r), c0, delta);
    if (sc > 0.0) {
      for (int j = 0; j < options.n_refine; ++j) {
        if (!design.wls(bisquare_weights(r, sc, c0), y, next)) break;
        coef = next;
        design.residuals(coef, y, r);
        sc = one_step(r, sc);
        if (sc == 0.0) break;
      }
    }
    if (best.size() == static_cast<std::size_t>(options.n_keep) && best.back().scale > 0.0 &&
        mean_rho(r, best.back().scale, c0) >= delta)
      continue;
    SCandidate cand{coef, mscale(as_span(r), c0, delta), s};
    exact = cand.scale == 0.0;
    best.insert(std::upper_bound(best.begin(), best.end(), cand, candidate_less), cand);
    if (best.size() > static_cast<std::size_t>(options.n_keep)) best.pop_back();
  }
  if (best.empty()) throw Error(ErrorCode::NoValidStart, "no elemental start gave a nonsingular fit");

  int iterations = 0;
  if (!exact) {
    for (auto& cand : best) {
      coef = cand.coef;
      design.residuals(coef, y, r);
      double sc = cand.scale;
      for (int it = 0; it < options.max_iter; ++it) {
        if (!design.wls(bisquare_weights(r, sc, c0), y, next)) break;
        const double change = (next - coef).norm();
        coef = next;
        design.residuals(coef, y, r);
        sc = one_step(r, sc);
        iterations = std::max(iterations, it + 1);
        if (sc == 0.0 || change <= 1e-8 * (coef.norm() + 1e-8)) break;
      }
      const double full = mscale(as_span(r), c0, delta);
      if (full < cand.scale) {
        cand.coef = coef;
        cand.scale = full;
      }
    }
  }
  const SCandidate& win = *std::min_element(best.begin(), best.end(), candidate_less);
  design.residuals(win.coef, y, r);
  RegressionFit fit = make_fit(win.coef, win.scale, r, c0);
  fit.iterations = iterations;
  fit.converged = true;
  return fit;
}

template <class Design>
RegressionFit m_fit(const Design& design, const Vector& y, Vector coef, double scale, double c, int max_iter,
                    double tol) {
  if (!(scale > 0.0)) throw Error(ErrorCode::DomainError, "M-step needs a positive scale");
  if (!(c > 0.0)) throw Error(ErrorCode::NonpositiveTuning, "bisquare tuning constant must be positive");
  Vector r;
  Vector next;
  design.residuals(coef, y, r);
  std::vector<double> trace{sum_rho(r, scale, c)};
  bool converged = false;
  int iterations = 0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector w = bisquare_weights(r, scale, c);
    if (!design.wls(w, y, next))
      throw Error(ErrorCode::RankDeficientWeighted, "weighted design lost rank in the M-step");
    const double change = (next - coef).norm();
    coef = next;
    design.residuals(coef, y, r);
    trace.push_back(sum_rho(r, scale, c));
    iterations = it + 1;
    if (change <= tol * (coef.norm() + tol)) {
      converged = true;
      break;
    }
  }
  RegressionFit fit = make_fit(coef, scale, r, c);
  fit.iterations = iterations;
  fit.converged = converged;
  fit.objective_trace = std::move(trace);
  return fit;
}

template <class Design>
RegressionFit mm_fit(const Design& design, const Vector& y, const SOptions& options, double c) {
  RegressionFit s = s_fit(design, y, options);
  if (s.scale == 0.0) return s;
  Vector coef(s.slopes.size() + 1);
  coef << s.intercept, s.slopes;
  return m_fit(design, y, coef, s.scale, c, 500, 1e-8);
}

template <class F>
decltype(auto) with_design(const Matrix& x, F&& f) {
  if (x.cols() == 0) return f(LocationDesign(x.rows()));
  return f(GeneralDesign(x));
}

}  // namespace

Vector RegressionFit::coefficients() const {
  Vector out(slopes.size() + 1);
  out << intercept, slopes;
  return out;
}

Vector RegressionFit::fitted(const Matrix& x) const {
  return (x * slopes).array() + intercept;
}

Vector RegressionFit::residuals(const Matrix& x, const Vector& y) const { return y - fitted(x); }

RegressionFit ols(const Matrix& x, const Vector& y, bool intercept) {
  const Index n = x.rows();
  if (y.size() != n) throw Error(ErrorCode::PreconditionViolated, "response length does not match the design");
  const Index cols = x.cols() + (intercept ? 1 : 0);
  if (n <= x.cols()) throw Error(ErrorCode::InsufficientData, "OLS needs n > k");
  Matrix a(n, cols);
  if (intercept) {
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
  } else {
    a = x;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < cols) throw Error(ErrorCode::RankDeficient, "design matrix is rank deficient");
  const Vector coef = qr.solve(y);
  const Vector r = y - a * coef;

  RegressionFit fit;
  fit.intercept = intercept ? coef(0) : 0.0;
  fit.slopes = intercept ? Vector(coef.tail(x.cols())) : coef;
  fit.scale = n > cols ? std::sqrt(r.squaredNorm() / static_cast<double>(n - cols)) : 0.0;
  fit.weights = Vector::Ones(n);
  fit.converged = true;
  return fit;
}

RegressionFit s_estimator(const Matrix& x, const Vector& y, const SOptions& options) {
  if (x.cols() == 1) return s_fit(SimpleDesign(Vector(x.col(0))), y, options);
  return with_design(x, [&](const auto& design) { return s_fit(design, y, options); });
}

RegressionFit m_step(const Matrix& x, const Vector& y, double intercept, const Vector& slopes, double scale, double c,
                     int max_iter, double tol) {
  if (slopes.size() != x.cols()) throw Error(ErrorCode::PreconditionViolated, "start has the wrong number of slopes");
  if (y.size() != x.rows()) throw Error(ErrorCode::PreconditionViolated, "response length does not match the design");
  Vector coef(slopes.size() + 1);
  coef << intercept, slopes;
  return with_design(x, [&](const auto& design) { return m_fit(design, y, coef, scale, c, max_iter, tol); });
}

RegressionFit mm_estimator(const Matrix& x, const Vector& y, const SOptions& options, double c) {
  if (x.cols() == 1) {
    const Vector col = x.col(0);
    return mm_fit(SimpleDesign(col), y, options, c);
  }
  return with_design(x, [&](const auto& design) { return mm_fit(design, y, options, c); });
}

RegressionFit mm_simple(const Vector& x, const Vector& y, const SOptions& options, double c) {
  if (x.size() != y.size()) throw Error(ErrorCode::PreconditionViolated, "predictor and response lengths differ");
  return mm_fit(SimpleDesign(x), y, options, c);
}

Vector standardized_residuals(const RegressionFit& fit, const Matrix& x, const Vector& y) {
  if (!(fit.scale > 0.0)) throw Error(ErrorCode::ZeroScale, "standardized residuals need a positive scale");
  return fit.residuals(x, y) / fit.scale;
}

}  // namespace rfps
