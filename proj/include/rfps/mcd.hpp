#pragma once

#include "rfps/types.hpp"

#include <cstdint>
#include <vector>

namespace rfps {

struct McdOptions {
  Index h = 0;  // 0 selects the maximal-breakdown size floor((n+d+1)/2)
  int n_starts = 500;
  int n_keep = 10;
  int max_csteps = 100;
  std::uint64_t seed = 0;
};

struct McdFit {
  // Reweighted estimates.
  Vector location;
  Matrix scatter;
  // Raw estimates of the optimal h-subset; scatter is consistency corrected.
  Vector raw_location;
  Matrix raw_scatter;
  IndexSet raw_subset;
  double raw_log_det = 0.0;
  // Mahalanobis distances under the reweighted estimates.
  Vector robust_distances;
  Index h = 0;
  // log det of the subset covariance after each C-step of the winning start.
  std::vector<double> cstep_trace;
};

Index default_mcd_h(Index n, Index d);

/// Reweighted minimum covariance determinant estimate of the rows of
/// `points` (n x d). Univariate data use the exact contiguous-window search;
/// otherwise FAST-MCD: random (d+1)-subsets, two C-steps each, the best
/// `n_keep` iterated to convergence. Throws BadSubsetSize and
/// DegenerateScatter.
McdFit fit_mcd(const Matrix& points, const McdOptions& options = {});

/// One concentration step: the h rows closest to the mean/covariance of
/// `subset`. Exposed for the monotonicity tests. Returns false when the
/// subset covariance is singular.
bool mcd_cstep(const Matrix& points, const IndexSet& subset, Index h, IndexSet& next, double& log_det);

}  // namespace rfps
