#include "rfps/mcd.hpp"
#include "rfps/error.hpp"
#include "rfps/rng.hpp"
#include "rfps/robust_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace rfps {

namespace {

struct Moments {
  Vector mean;
  Matrix cov;  // divisor m
  Eigen::LLT<Matrix> llt;
  double log_det = 0.0;
  bool singular = true;
};

Moments subset_moments(const Matrix& points, const IndexSet& subset) {
  const Index d = points.cols();
  const auto m = static_cast<double>(subset.size());
  Moments out;
  out.mean = Vector::Zero(d);
  for (Index i : subset) out.mean += points.row(i).transpose();
  out.mean /= m;
  out.cov = Matrix::Zero(d, d);
  for (Index i : subset) {
    const Vector c = points.row(i).transpose() - out.mean;
    out.cov.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  out.cov = out.cov.selfadjointView<Eigen::Lower>();
  out.cov /= m;
  out.llt.compute(out.cov);
  if (out.llt.info() != Eigen::Success) return out;
  const Vector diag = out.llt.matrixL().toDenseMatrix().diagonal();
  const double max_var = out.cov.diagonal().maxCoeff();
  if (!(max_var > 0.0) || diag.minCoeff() * diag.minCoeff() <= 1e-12 * max_var) return out;
  out.log_det = 2.0 * diag.array().log().sum();
  out.singular = false;
  return out;
}

Vector squared_mahalanobis(const Matrix& points, const Vector& center, const Eigen::LLT<Matrix>& llt) {
  Matrix centered = (points.rowwise() - center.transpose()).transpose();
  llt.matrixL().solveInPlace(centered);
  return centered.colwise().squaredNorm().transpose();
}

IndexSet smallest(const Vector& values, Index h) {
  std::vector<std::pair<double, Index>> keyed(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) keyed[static_cast<std::size_t>(i)] = {values(i), i};
  std::nth_element(keyed.begin(), keyed.begin() + (h - 1), keyed.end());
  IndexSet out;
  out.reserve(static_cast<std::size_t>(h));
  for (Index i = 0; i < h; ++i) out.push_back(keyed[static_cast<std::size_t>(i)].second);
  std::sort(out.begin(), out.end());
  return out;
}

struct Candidate {
  IndexSet subset;
  double log_det = std::numeric_limits<double>::infinity();
  int start = 0;
  std::vector<double> trace;
};

// Exact univariate MCD: the optimal h-subset is a contiguous window of the
// sorted sample.
IndexSet univariate_subset(const Matrix& points, Index h) {
  const Index n = points.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return points(a, 0) < points(b, 0); });

  std::vector<double> x(static_cast<std::size_t>(n));
  const double shift = points(order[static_cast<std::size_t>(n / 2)], 0);
  for (Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = points(order[static_cast<std::size_t>(i)], 0) - shift;

  double sum = 0.0;
  double sq = 0.0;
  for (Index i = 0; i < h; ++i) {
    sum += x[static_cast<std::size_t>(i)];
    sq += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
  }
  const auto hd = static_cast<double>(h);
  double best = sq - sum * sum / hd;
  Index best_start = 0;
  for (Index s = 1; s + h <= n; ++s) {
    const double out = x[static_cast<std::size_t>(s - 1)];
    const double in = x[static_cast<std::size_t>(s + h - 1)];
    sum += in - out;
    sq += in * in - out * out;
    const double ss = sq - sum * sum / hd;
    if (ss < best) {
      best = ss;
      best_start = s;
    }
  }
  IndexSet subset(order.begin() + best_start, order.begin() + best_start + h);
  std::sort(subset.begin(), subset.end());
  return subset;
}

}  // namespace

Index default_mcd_h(Index n, Index d) { return (n + d + 1) / 2; }

bool mcd_cstep(const Matrix& points, const IndexSet& subset, Index h, IndexSet& next, double& log_det) {
  const Moments mom = subset_moments(points, subset);
  if (mom.singular) return false;
  next = smallest(squared_mahalanobis(points, mom.mean, mom.llt), h);
  const Moments after = subset_moments(points, next);
  if (after.singular) return false;
  log_det = after.log_det;
  return true;
}

McdFit fit_mcd(const Matrix& points, const McdOptions& options) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (d < 1 || n <= d) throw Error(ErrorCode::BadSubsetSize, "MCD needs n > d >= 1");
  const Index h = options.h > 0 ? options.h : default_mcd_h(n, d);
  if (h < default_mcd_h(n, d) || h > n) throw Error(ErrorCode::BadSubsetSize, "MCD subset size out of range");

  McdFit fit;
  fit.h = h;

  if (d == 1) {
    fit.raw_subset = univariate_subset(points, h);
  } else {
    std::vector<Candidate> candidates;
    candidates.reserve(static_cast<std::size_t>(options.n_starts));
    for (int s = 0; s < options.n_starts; ++s) {
      CounterRng rng(options.seed, 0x4D4344 /* "MCD" */, static_cast<std::uint64_t>(s));
      IndexSet subset = sample_indices(rng, n, d + 1);
      Moments mom = subset_moments(points, subset);
      // Grow singular elemental sets one random point at a time.
      while (mom.singular && static_cast<Index>(subset.size()) < h) {
        Index extra;
        do {
          extra = rng.uniform_index(n);
        } while (std::binary_search(subset.begin(), subset.end(), extra));
        subset.insert(std::upper_bound(subset.begin(), subset.end(), extra), extra);
        mom = subset_moments(points, subset);
      }
      if (mom.singular) continue;

      Candidate cand;
      cand.start = s;
      cand.subset = smallest(squared_mahalanobis(points, mom.mean, mom.llt), h);
      bool ok = true;
      for (int step = 0; step < 2 && ok; ++step) {
        IndexSet next;
        double ld = 0.0;
        ok = mcd_cstep(points, cand.subset, h, next, ld);
        if (ok) {
          cand.subset = std::move(next);
          cand.log_det = ld;
          cand.trace.push_back(ld);
        }
      }
      if (ok) candidates.push_back(std::move(cand));
    }
    if (candidates.empty())
      throw Error(ErrorCode::DegenerateScatter, "every MCD start produced a singular h-subset");

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return a.log_det != b.log_det ? a.log_det < b.log_det : a.start < b.start;
    });
    candidates.resize(std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(options.n_keep)));

    Candidate* best = nullptr;
    for (auto& cand : candidates) {
      for (int step = 0; step < options.max_csteps; ++step) {
        IndexSet next;
        double ld = 0.0;
        if (!mcd_cstep(points, cand.subset, h, next, ld)) break;
        const bool same = next == cand.subset;
        if (ld > cand.log_det) break;
        cand.subset = std::move(next);
        cand.log_det = ld;
        cand.trace.push_back(ld);
        if (same) break;
      }
      if (!best || cand.log_det < best->log_det) best = &cand;
    }
    fit.raw_subset = best->subset;
    fit.cstep_trace = best->trace;
  }

  const Moments raw = subset_moments(points, fit.raw_subset);
  if (raw.singular) throw Error(ErrorCode::DegenerateScatter, "optimal h-subset has a singular covariance");
  fit.raw_log_det = raw.log_det;
  fit.raw_location = raw.mean;

  const double chi_median = chi2_quantile(0.5, static_cast<int>(d));
  {
    const Vector d2 = squared_mahalanobis(points, raw.mean, raw.llt);
    fit.raw_scatter = raw.cov * (median(as_span(d2)) / chi_median);
  }

  // Reweighting pass with the 97.5% chi-square cutoff.
  const double cutoff = chi2_quantile(0.975, static_cast<int>(d));
  Eigen::LLT<Matrix> raw_llt(fit.raw_scatter);
  const Vector raw_d2 = squared_mahalanobis(points, fit.raw_location, raw_llt);
  IndexSet kept;
  for (Index i = 0; i < n; ++i)
    if (raw_d2(i) <= cutoff) kept.push_back(i);
  Moments rw = subset_moments(points, kept);
  if (rw.singular) {
    // Fall back to the raw estimates.
    fit.location = fit.raw_location;
    fit.scatter = fit.raw_scatter;
  } else {
    const Vector d2 = squared_mahalanobis(points, rw.mean, rw.llt);
    fit.location = rw.mean;
    fit.scatter = rw.cov * (median(as_span(d2)) / chi_median);
  }
  Eigen::LLT<Matrix> final_llt(fit.scatter);
  fit.robust_distances = squared_mahalanobis(points, fit.location, final_llt).cwiseSqrt();
  return fit;
}

}  // namespace rfps
