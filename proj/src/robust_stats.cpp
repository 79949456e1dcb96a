#include "rfps/robust_stats.hpp"
#include "rfps/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace rfps {

namespace {

void require_nonempty(std::span<const double> xs, const char* what) {
  if (xs.empty()) throw Error(ErrorCode::EmptyInput, std::string(what) + " of an empty sample");
}

void require_tuning(double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::NonpositiveTuning, "bisquare tuning constant must be positive");
}

// Finite-sample correction of Qn for n = 2..9.
constexpr std::array<double, 8> kQnSmallSample = {0.399, 0.994, 0.512, 0.844,
                                                  0.611, 0.857, 0.669, 0.872};
constexpr double kQnConsistency = 2.2219;

}  // namespace

double median(std::span<const double> xs) {
  require_nonempty(xs, "median");
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double qn_scale(std::span<const double> xs) {
  require_nonempty(xs, "Qn");
  const std::size_t n = xs.size();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "Qn needs at least two observations");

  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> gaps;
  gaps.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) gaps.push_back(sorted[j] - sorted[i]);

  const std::size_t h = n / 2 + 1;
  const std::size_t k = h * (h - 1) / 2;
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(k - 1), gaps.end());
  const double raw = kQnConsistency * gaps[k - 1];
  return n <= 9 ? raw * kQnSmallSample[n - 2] : raw;
}

RobustScale location_scale(std::span<const double> xs, ScaleEstimator estimator) {
  require_nonempty(xs, "location/scale");
  if (estimator == ScaleEstimator::MedianQn) return {median(xs), qn_scale(xs), estimator};

  if (xs.size() < 2) throw Error(ErrorCode::InsufficientData, "sd needs at least two observations");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1)), estimator};
}

double bisquare_rho(double u, double c) {
  require_tuning(c);
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 1.0;
  const double a = 1.0 - t * t;
  return 1.0 - a * a * a;
}

double bisquare_psi(double u, double c) {
  require_tuning(c);
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 0.0;
  const double a = 1.0 - t * t;
  return 6.0 * t * a * a / c;
}

double bisquare_weight(double u, double c) {
  require_tuning(c);
  const double t = u / c;
  if (std::abs(t) >= 1.0) return 0.0;
  const double a = 1.0 - t * t;
  return a * a;
}

double mscale(std::span<const double> residuals, double c, double delta) {
  require_nonempty(residuals, "M-scale");
  require_tuning(c);
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::DomainError, "M-scale delta must lie in (0,1)");

  const double n = static_cast<double>(residuals.size());
  std::vector<double> abs_r;
  abs_r.reserve(residuals.size());
  std::size_t zeros = 0;
  double max_abs = 0.0;
  for (double r : residuals) {
    const double a = std::abs(r);
    if (a == 0.0) ++zeros;
    max_abs = std::max(max_abs, a);
    abs_r.push_back(a);
  }
  if (static_cast<double>(zeros) >= (1.0 - delta) * n) return 0.0;

  // g(s) = mean rho(r/s) - delta is continuous and strictly decreasing on the
  // region where it crosses zero.
  auto g = [&](double s) {
    double acc = 0.0;
    for (double a : abs_r) acc += bisquare_rho(a / s, c);
    return acc / n - delta;
  };
  auto dg = [&](double s) {
    // d/ds mean rho(a/s) = -mean psi(a/s) * a / s^2
    double acc = 0.0;
    for (double a : abs_r) acc += bisquare_psi(a / s, c) * a;
    return -acc / (n * s * s);
  };

  // Bracket: at hi every |r|/hi < c * small so g < 0; at lo g > 0.
  double hi = max_abs / c * 1e3;
  double lo = std::max(median(abs_r), max_abs * 1e-3);
  lo = lo > 0.0 ? lo / 0.6745 : max_abs;
  int expand = 0;
  while (g(lo) <= 0.0) {
    hi = lo;
    lo *= 0.5;
    if (++expand > 2000) throw Error(ErrorCode::NoConvergence, "M-scale bracket search failed");
  }
  double s = lo;
  if (g(hi) >= 0.0) throw Error(ErrorCode::NoConvergence, "M-scale upper bracket failed");

  // Newton with bisection safeguard (rtsafe).
  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-10;
  double step_old = hi - lo;
  double step = step_old;
  double gs = g(s);
  double dgs = dg(s);
  for (int it = 0; it < kMaxIter; ++it) {
    const bool newton_out = ((s - hi) * dgs - gs) * ((s - lo) * dgs - gs) > 0.0;
    const bool too_slow = std::abs(2.0 * gs) > std::abs(step_old * dgs);
    double next;
    if (newton_out || too_slow || dgs == 0.0) {
      step_old = step;
      step = 0.5 * (hi - lo);
      next = lo + step;
    } else {
      step_old = step;
      step = gs / dgs;
      next = s - step;
    }
    if (std::abs(next - s) <= kTol * next) {
      return next;
    }
    s = next;
    gs = g(s);
    dgs = dg(s);
    if (gs > 0.0)
      lo = s;
    else
      hi = s;
    if (gs == 0.0) return s;
  }
  throw Error(ErrorCode::NoConvergence, "M-scale did not converge in 200 iterations");
}

double chi2_quantile(double prob, int df) {
  if (!(prob > 0.0 && prob < 1.0) || df < 1)
    throw Error(ErrorCode::DomainError, "chi-square quantile needs 0 < prob < 1 and df >= 1");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
}

double chi2_cdf(double x, int df) {
  if (df < 1) throw Error(ErrorCode::DomainError, "chi-square df must be >= 1");
  if (x <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::chi_squared_distribution<double>(df), x);
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw Error(ErrorCode::DomainError, "normal quantile needs 0 < prob < 1");
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

double quantile(std::span<const double> xs, double prob) {
  require_nonempty(xs, "quantile");
  if (!(prob >= 0.0 && prob <= 1.0)) throw Error(ErrorCode::DomainError, "quantile prob must lie in [0,1]");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace rfps
