#pragma once

#include "rfps/robust_stats.hpp"
#include "rfps/types.hpp"

#include <cstdint>
#include <vector>

namespace rfps {

struct RegressionFit {
  double intercept = 0.0;
  Vector slopes;
  double scale = 0.0;
  Vector weights;
  // Bisquare constant the weights were evaluated with (0 for OLS).
  double tuning = 0.0;
  int iterations = 0;
  bool converged = false;
  // sum rho(r_i / scale) at every IRWLS iterate of an M-step.
  std::vector<double> objective_trace;

  Vector coefficients() const;  // (intercept, slopes)
  Vector fitted(const Matrix& x) const;
  Vector residuals(const Matrix& x, const Vector& y) const;
};

/// Least squares with an optional intercept. Throws RankDeficient.
RegressionFit ols(const Matrix& x, const Vector& y, bool intercept = true);

struct SOptions {
  int n_starts = 0;  // 0: 50 for k <= 1, 500 otherwise
  int n_refine = 2;
  int n_keep = 5;
  int max_iter = 100;
  std::uint64_t seed = 0;
};

/// Fast-S regression estimate (bisquare c = 1.547, delta = 0.5) with an
/// intercept; x may have zero columns (location). Throws InsufficientData,
/// RankDeficient, NoValidStart.
RegressionFit s_estimator(const Matrix& x, const Vector& y, const SOptions& options = {});

/// IRWLS M-step at fixed scale from the given start. Throws DomainError for a
/// nonpositive scale and RankDeficientWeighted.
RegressionFit m_step(const Matrix& x, const Vector& y, double intercept, const Vector& slopes, double scale,
                     double c = kEfficientTuning, int max_iter = 500, double tol = 1e-8);

/// S-estimate followed by an M-step at the S-scale.
RegressionFit mm_estimator(const Matrix& x, const Vector& y, const SOptions& options = {},
                           double c = kEfficientTuning);

/// MM fit of y on a single predictor; the screening fast path.
RegressionFit mm_simple(const Vector& x, const Vector& y, const SOptions& options = {},
                        double c = kEfficientTuning);

/// r_i / scale. Throws ZeroScale.
Vector standardized_residuals(const RegressionFit& fit, const Matrix& x, const Vector& y);

}  // namespace rfps
