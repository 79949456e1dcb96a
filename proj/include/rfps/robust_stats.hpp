#pragma once

#include "rfps/types.hpp"

#include <span>

namespace rfps {

// Bisquare tuning constants. 4.685 gives 95% Gaussian efficiency for the
// M/MM steps; (1.547, 0.5) gives a 50% breakdown, Gaussian-consistent S-scale.
inline constexpr double kEfficientTuning = 4.685;
inline constexpr double kBreakdownTuning = 1.547;
inline constexpr double kBreakdownDelta = 0.5;

enum class ScaleEstimator { MedianQn, MeanSd };

struct RobustScale {
  double location = 0.0;
  double scale = 0.0;
  ScaleEstimator estimator = ScaleEstimator::MedianQn;
};

/// Sample median; the mean of the two middle order statistics for even n.
/// Throws EmptyInput.
double median(std::span<const double> xs);

/// Rousseeuw-Croux Qn: 2.2219 times the C(h,2)-th smallest pairwise absolute
/// difference, h = floor(n/2)+1, with the published finite-sample factors for
/// n <= 9. Throws EmptyInput / InsufficientData (n < 2).
double qn_scale(std::span<const double> xs);

/// Location/scale pair: (median, Qn) or (mean, sample sd).
RobustScale location_scale(std::span<const double> xs, ScaleEstimator estimator);

/// Bisquare loss normalised to rho(0) = 0, rho(+-c) = 1.
double bisquare_rho(double u, double c);
/// Derivative of bisquare_rho.
double bisquare_psi(double u, double c);
/// IRWLS weight (1 - (u/c)^2)^2 on |u| < c, 0 outside; proportional to psi(u)/u.
double bisquare_weight(double u, double c);

/// M-scale: s solving mean(rho(r_i / s)) = delta. Returns 0 when at least
/// (1 - delta) n residuals are exactly zero. Throws EmptyInput,
/// NonpositiveTuning, DomainError (delta outside (0,1)) and NoConvergence.
double mscale(std::span<const double> residuals, double c = kBreakdownTuning,
              double delta = kBreakdownDelta);

/// Chi-square quantile. Throws DomainError for prob outside (0,1) or df < 1.
double chi2_quantile(double prob, int df);
/// Chi-square distribution function.
double chi2_cdf(double x, int df);
/// Standard normal quantile. Throws DomainError for prob outside (0,1).
double normal_quantile(double prob);

/// Linear-interpolation sample quantile (order statistic at prob*(n-1)).
double quantile(std::span<const double> xs, double prob);

}  // namespace rfps
