#pragma once

// Reference implementations used only by the tests. They are written from the
// definitions, share no code with the library, and favour clarity over speed.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Regularized lower incomplete gamma P(a, x): power series below a + 1,
// Lentz continued fraction above.
inline double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const long double la = a;
  const long double lx = x;
  const long double log_front = la * std::log(lx) - lx - std::lgamma(la);
  if (x < a + 1.0) {
    long double term = 1.0L / la;
    long double sum = term;
    for (int k = 1; k < 10000; ++k) {
      term *= lx / (la + k);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-19L) break;
    }
    return static_cast<double>(sum * std::exp(log_front));
  }
  const long double tiny = 1e-300L;
  long double b = lx + 1.0L - la;
  long double c = 1.0L / tiny;
  long double d = 1.0L / b;
  long double h = d;
  for (int i = 1; i < 10000; ++i) {
    const long double an = -i * (i - la);
    b += 2.0L;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0L / d;
    const long double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0L) < 1e-19L) break;
  }
  return static_cast<double>(1.0L - std::exp(log_front) * h);
}

inline double chi2_cdf(double x, int df) { return gamma_p(0.5 * df, 0.5 * x); }

inline double chi2_quantile(double prob, int df) {
  double lo = 0.0;
  double hi = 1.0;
  while (chi2_cdf(hi, df) < prob) hi *= 2.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, df) < prob) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double normal_quantile(double prob) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < prob) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Qn from the order-statistic definition over all unordered pairs.
inline double qn(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> gaps;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) gaps.push_back(std::fabs(x[i] - x[j]));
  std::sort(gaps.begin(), gaps.end());
  const std::size_t h = n / 2 + 1;
  const std::size_t k = h * (h - 1) / 2;
  const double small[] = {0.399, 0.994, 0.512, 0.844, 0.611, 0.857, 0.669, 0.872};
  const double factor = n <= 9 ? small[n - 2] : 1.0;
  return 2.2219 * factor * gaps[k - 1];
}

inline double bisquare_rho(double u, double c) {
  if (std::fabs(u) >= c) return 1.0;
  const double t = u / c;
  return 3 * t * t - 3 * std::pow(t, 4) + std::pow(t, 6);
}

// M-scale by plain bisection on mean rho(r/s) = delta.
inline double mscale(const std::vector<double>& r, double c, double delta) {
  auto g = [&](double s) {
    double acc = 0.0;
    for (double v : r) acc += bisquare_rho(v / s, c);
    return acc / static_cast<double>(r.size()) - delta;
  };
  double hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  double lo = hi;
  while (g(lo) < 0.0) lo *= 0.5;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Linear-interpolation quantile at prob * (n - 1) via a full sort.
inline double quantile(std::vector<double> v, double prob) {
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Sum of squared distances of `rows` to their own rank-d least-squares affine
// fit (JacobiSVD of the centred rows).
inline double subset_rss(const Matrix& x, const std::vector<int>& rows, int d) {
  Matrix s(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) s.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
  const Eigen::RowVectorXd mean = s.colwise().mean();
  s.rowwise() -= mean;
  Eigen::JacobiSVD<Matrix> svd(s);
  const Vector sv = svd.singularValues();
  double rss = 0.0;
  for (Eigen::Index k = d; k < sv.size(); ++k) rss += sv(k) * sv(k);
  return rss;
}

// Global LTS optimum by enumeration of every h-subset.
inline double lts_exhaustive(const Matrix& x, int d, int h) {
  const int n = static_cast<int>(x.rows());
  std::vector<char> pick(static_cast<std::size_t>(n), 0);
  std::fill(pick.begin(), pick.begin() + h, 1);
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (pick[static_cast<std::size_t>(i)]) rows.push_back(i);
    best = std::min(best, subset_rss(x, rows, d));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

struct Window {
  std::vector<int> rows;  // sorted indices into the original sample
  double mean = 0.0;
  double variance = 0.0;  // divisor h
};

// Univariate MCD: the contiguous window of the sorted sample with the smallest
// variance, each window evaluated from scratch.
inline Window mcd_window(const std::vector<double>& x, int h) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
  Window best;
  best.variance = std::numeric_limits<double>::infinity();
  for (int s = 0; s + h <= n; ++s) {
    double mean = 0.0;
    for (int i = s; i < s + h; ++i) mean += x[order[i]];
    mean /= h;
    double var = 0.0;
    for (int i = s; i < s + h; ++i) var += (x[order[i]] - mean) * (x[order[i]] - mean);
    var /= h;
    if (var < best.variance) {
      best.variance = var;
      best.mean = mean;
      best.rows.assign(order.begin() + s, order.begin() + s + h);
    }
  }
  std::sort(best.rows.begin(), best.rows.end());
  return best;
}

// Smallest k with |first k of order ∩ truth| >= m, for every m.
inline std::vector<long> mms(const std::vector<long>& order, const std::vector<long>& truth) {
  std::vector<long> out;
  for (std::size_t m = 1; m <= truth.size(); ++m) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (std::find(truth.begin(), truth.end(), order[k]) != truth.end()) ++hits;
      if (hits >= m) {
        out.push_back(static_cast<long>(k + 1));
        break;
      }
    }
  }
  return out;
}

// Largest principal angle (radians) between the column spaces of a and b.
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  const double smallest = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
  return std::acos(smallest);
}

inline Matrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

}  // namespace oracle
