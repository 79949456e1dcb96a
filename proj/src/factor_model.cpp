#include "rfps/factor_model.hpp"
#include "rfps/error.hpp"
#include "rfps/mcd.hpp"
#include "rfps/parallel.hpp"
#include "rfps/rng.hpp"
#include "rfps/robust_stats.hpp"

#include "linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace rfps {

namespace {

constexpr std::uint64_t kLtsStream = 0x4C5453;  // "LTS"
constexpr std::uint64_t kMcdStream = 0x4D4344;  // "MCD"

struct CStep {
  linalg::SubspaceFit fit;
  IndexSet next;
  double objective = 0.0;
};

IndexSet smallest_h(const Vector& values, Index h) {
  std::vector<std::pair<double, Index>> keyed(static_cast<std::size_t>(values.size()));
  for (Index i = 0; i < values.size(); ++i) keyed[static_cast<std::size_t>(i)] = {values(i), i};
  std::nth_element(keyed.begin(), keyed.begin() + (h - 1), keyed.end());
  IndexSet out;
  out.reserve(static_cast<std::size_t>(h));
  for (Index i = 0; i < h; ++i) out.push_back(keyed[static_cast<std::size_t>(i)].second);
  std::sort(out.begin(), out.end());
  return out;
}

CStep cstep(const Matrix& data, const Matrix& gram, const IndexSet& subset, Index d, Index h) {
  CStep out;
  out.fit = linalg::fit_affine_subspace(data, gram, subset, d);
  const Vector res = linalg::squared_residuals(data, out.fit);
  out.next = smallest_h(res, h);
  for (Index i : out.next) out.objective += res(i);
  return out;
}

struct LtsCandidate {
  bool valid = false;
  int start = 0;
  IndexSet subset;  // input of the next C-step
  double objective = std::numeric_limits<double>::infinity();
  linalg::SubspaceFit fit;
  std::vector<double> trace;
  bool converged = false;
};

bool better(const LtsCandidate& a, const LtsCandidate& b) {
  return a.objective != b.objective ? a.objective < b.objective : a.start < b.start;
}

double data_scale(const Matrix& data, const Vector& center) {
  if (data.rows() == 0) return 0.0;
  return std::sqrt((data.rowwise() - center.transpose()).rowwise().squaredNorm().mean());
}

// Standardised od for the OC rule. When Qn(od) = 0 (an exact fit for at least
// half of the rows) the rule degenerates to od > median + tol, expressed on
// the same scale so that the transformed od still exceeds the cutoff exactly
// for flagged rows.
struct OdStandardization {
  double location = 0.0;
  double scale = 0.0;
  bool exact_fit = false;
};

OdStandardization standardize_od(const Vector& od, double tol, double cutoff) {
  OdStandardization s;
  s.location = median(as_span(od));
  s.scale = qn_scale(as_span(od));
  if (!(s.scale > 0.0)) {
    s.exact_fit = true;
    s.scale = std::max(tol, std::numeric_limits<double>::min()) / cutoff;
  }
  return s;
}

Vector transform_od(const Vector& od, const OdStandardization& s, double lambda) {
  Vector out(od.size());
  for (Index i = 0; i < od.size(); ++i) out(i) = yeo_johnson(lambda, (od(i) - s.location) / s.scale);
  return out;
}

Vector compute_od(const Matrix& data, const Vector& mu, const Matrix& B, const Matrix& Z) {
  return ((data.rowwise() - mu.transpose()) - Z * B.transpose()).rowwise().norm();
}

double oc_cutoff() { return normal_quantile(0.975); }

}  // namespace

const char* to_string(ObservationFlag flag) {
  switch (flag) {
    case ObservationFlag::Regular: return "regular";
    case ObservationFlag::PcOutlier: return "pc";
    case ObservationFlag::OcOutlier: return "oc";
  }
  return "unknown";
}

IndexSet FactorFit::rows_with(ObservationFlag flag) const {
  IndexSet out;
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i] == flag) out.push_back(static_cast<Index>(i));
  return out;
}

Matrix FactorFit::fitted() const { return (Z * B.transpose()).rowwise() + mu.transpose(); }

Preprojection svd_preproject(const Matrix& x) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "preprojection needs at least two rows");

  Preprojection pre;
  pre.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - pre.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index r = 0;
  const double tol = s.size() > 0 ? static_cast<double>(std::max(n, p)) * std::numeric_limits<double>::epsilon() * s(0)
                                  : 0.0;
  while (r < s.size() && s(r) > tol) ++r;
  pre.xstar = svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
  pre.projection = svd.matrixV().leftCols(r);
  return pre;
}

Index default_lts_h(Index n, Index d) { return (n - d + 2) / 2; }

LtsFit fit_lts_subspace(const Matrix& data, Index d, const LtsOptions& options) {
  const Index n = data.rows();
  const Index r = data.cols();
  const Index h = options.h > 0 ? options.h : default_lts_h(n, d);
  if (d < 1) throw Error(ErrorCode::BadTrim, "factor dimension must be positive");
  if (h < default_lts_h(n, d) || h >= n) throw Error(ErrorCode::BadTrim, "trimming count h outside [(n-d+2)/2, n)");
  if (d > std::min(h - 1, r)) throw Error(ErrorCode::BadTrim, "d exceeds min(h-1, rank)");

  const Matrix gram = data * data.transpose();

  std::vector<LtsCandidate> candidates(static_cast<std::size_t>(options.n_starts));
  parallel_for(candidates.size(), options.threads, [&](std::size_t s) {
    LtsCandidate& cand = candidates[s];
    cand.start = static_cast<int>(s);
    CounterRng rng(options.seed, kLtsStream, s);
    cand.subset = sample_indices(rng, n, d + 1);
    try {
      for (int step = 0; step <= options.n_init_steps; ++step) {
        CStep c = cstep(data, gram, cand.subset, d, h);
        cand.converged = c.next == cand.subset;
        cand.subset = std::move(c.next);
        cand.objective = c.objective;
        cand.fit = std::move(c.fit);
        cand.trace.push_back(cand.objective);
        if (cand.converged) break;
      }
      cand.valid = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficientSubset) throw;
    }
  });

  std::vector<LtsCandidate> kept;
  for (auto& c : candidates)
    if (c.valid) kept.push_back(std::move(c));
  if (kept.empty()) throw Error(ErrorCode::RankDeficientSubset, "every LTS start spans fewer than d dimensions");
  std::sort(kept.begin(), kept.end(), better);
  kept.resize(std::min<std::size_t>(kept.size(), static_cast<std::size_t>(options.n_keep)));

  parallel_for(kept.size(), options.threads, [&](std::size_t k) {
    LtsCandidate& cand = kept[k];
    for (int step = 0; step < options.max_csteps && !cand.converged; ++step) {
      CStep c;
      try {
        c = cstep(data, gram, cand.subset, d, h);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficientSubset) throw;
        break;
      }
      cand.converged = c.next == cand.subset;
      cand.subset = std::move(c.next);
      cand.objective = c.objective;
      cand.fit = std::move(c.fit);
      cand.trace.push_back(cand.objective);
    }
  });
  const LtsCandidate& best = *std::min_element(kept.begin(), kept.end(), better);

  LtsFit out;
  out.center = best.fit.center;
  out.state.subset = best.subset;
  out.state.objective = best.objective;
  out.state.trace = best.trace;

  // Orthogonalise the scores so that Z^T Z / n = I; Z B^T is unchanged.
  const Matrix raw_scores = (data.rowwise() - out.center.transpose()) * best.fit.basis;
  Eigen::JacobiSVD<Matrix> svd(raw_scores, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double root_n = std::sqrt(static_cast<double>(n));
  out.scores = svd.matrixU() * root_n;
  out.loadings = best.fit.basis * svd.matrixV() * (svd.singularValues() / root_n).asDiagonal();
  return out;
}

double yeo_johnson(double lambda, double d) {
  if (d >= 0.0) {
    if (lambda == 0.0) return std::log1p(d);
    return (std::pow(d + 1.0, lambda) - 1.0) / lambda;
  }
  if (lambda == 2.0) return -std::log1p(-d);
  return -(std::pow(1.0 - d, 2.0 - lambda) - 1.0) / (2.0 - lambda);
}

double trimmed_log_likelihood(const Vector& standardized, double lambda, Index h) {
  const Index n = standardized.size();
  Vector psi(n);
  for (Index i = 0; i < n; ++i) psi(i) = yeo_johnson(lambda, standardized(i));
  const double mu = median(as_span(psi));
  const double sigma = qn_scale(as_span(psi));
  if (!(sigma > 0.0)) return -std::numeric_limits<double>::infinity();

  std::vector<double> contrib(static_cast<std::size_t>(n));
  const double c0 = -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sigma);
  for (Index i = 0; i < n; ++i) {
    const double di = standardized(i);
    const double z = (psi(i) - mu) / sigma;
    const double sign = di > 0.0 ? 1.0 : (di < 0.0 ? -1.0 : 0.0);
    contrib[static_cast<std::size_t>(i)] = c0 - 0.5 * z * z + (lambda - 1.0) * sign * std::log1p(std::abs(di));
  }
  const auto hh = static_cast<std::ptrdiff_t>(std::min(h, n));
  std::nth_element(contrib.begin(), contrib.begin() + (hh - 1), contrib.end(), std::greater<>());
  double total = 0.0;
  for (std::ptrdiff_t i = 0; i < hh; ++i) total += contrib[static_cast<std::size_t>(i)];
  return total;
}

LambdaSelection select_lambda(const Vector& od, Index h) {
  const Index n = od.size();
  if (n < 4) throw Error(ErrorCode::InsufficientData, "lambda selection needs at least four distances");
  if (h < 1 || h > n) throw Error(ErrorCode::BadTrim, "trimming count outside [1, n]");

  LambdaSelection out;
  out.od_location = median(as_span(od));
  out.od_scale = qn_scale(as_span(od));
  if (!(out.od_scale > 0.0)) throw Error(ErrorCode::ZeroScale, "Qn of the orthogonal distances is zero");
  const Vector standardized = (od.array() - out.od_location) / out.od_scale;

  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 50; ++k) {
    const double lambda = k / 50.0;
    const double value = trimmed_log_likelihood(standardized, lambda, h);
    out.grid.push_back(lambda);
    out.trimmed_likelihood.push_back(value);
    if (value > best) {
      best = value;
      out.lambda = lambda;
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::ZeroScale, "transformed distances have zero Qn for every lambda");
  out.transformed.resize(n);
  for (Index i = 0; i < n; ++i) out.transformed(i) = yeo_johnson(out.lambda, standardized(i));
  return out;
}

FactorFit reweight_subspace(const Matrix& data, const FactorFit& fit, Index h) {
  const Index n = data.rows();
  const Index d = fit.d;
  const double cutoff = oc_cutoff();
  const double tol = 1e-8 * std::max(data_scale(data, fit.mu), 1e-300);

  FactorFit out = fit;
  out.h = h;
  out.od_cutoff = cutoff;

  OdStandardization s = standardize_od(fit.od, tol, cutoff);
  if (s.exact_fit) {
    out.lambda_opt = 1.0;
  } else {
    out.lambda_opt = select_lambda(fit.od, h).lambda;
  }
  Vector transformed = transform_od(fit.od, s, out.lambda_opt);

  IndexSet keep;
  for (Index i = 0; i < n; ++i)
    if (!(transformed(i) > cutoff)) keep.push_back(i);
  if (static_cast<Index>(keep.size()) < d + 1)
    throw Error(ErrorCode::AllFlagged, "fewer than d+1 rows remain after flagging OC outliers");

  const linalg::SubspaceFit ls = linalg::fit_affine_subspace(data, Matrix(), keep, d);
  out.mu = ls.center;
  out.B = ls.basis;
  out.Z = (data.rowwise() - ls.center.transpose()) * ls.basis;
  out.od = linalg::squared_residuals(data, ls).cwiseSqrt();

  s = standardize_od(out.od, 1e-8 * std::max(data_scale(data, out.mu), 1e-300), cutoff);
  if (s.exact_fit) out.lambda_opt = 1.0;
  out.transformed_od = transform_od(out.od, s, out.lambda_opt);
  out.flags.assign(static_cast<std::size_t>(n), ObservationFlag::Regular);
  for (Index i = 0; i < n; ++i)
    if (out.transformed_od(i) > cutoff) out.flags[static_cast<std::size_t>(i)] = ObservationFlag::OcOutlier;
  return out;
}

FactorFit reweight_scores(const FactorFit& fit, std::uint64_t mcd_seed, int mcd_starts) {
  const Index n = fit.Z.rows();
  const Index d = fit.d;
  McdOptions mopt;
  mopt.seed = mcd_seed;
  mopt.n_starts = mcd_starts;
  McdFit mcd;
  try {
    mcd = fit_mcd(fit.Z, mopt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateScatter) throw Error(ErrorCode::SingularScatter, e.what());
    throw;
  }

  const double q = chi2_quantile(0.975, static_cast<int>(d));
  const double cutoff = std::sqrt(q);
  std::vector<bool> oc(static_cast<std::size_t>(n), false);
  if (!fit.flags.empty())
    for (Index i = 0; i < n; ++i) oc[static_cast<std::size_t>(i)] = fit.flags[static_cast<std::size_t>(i)] == ObservationFlag::OcOutlier;

  Vector mu_z = Vector::Zero(d);
  double count = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (mcd.robust_distances(i) <= cutoff && !oc[static_cast<std::size_t>(i)]) {
      mu_z += fit.Z.row(i).transpose();
      count += 1.0;
    }
  }
  if (count < static_cast<double>(d + 1)) throw Error(ErrorCode::SingularScatter, "too few rows for the score scatter");
  mu_z /= count;
  Matrix sigma_z = Matrix::Zero(d, d);
  for (Index i = 0; i < n; ++i) {
    if (mcd.robust_distances(i) <= cutoff && !oc[static_cast<std::size_t>(i)]) {
      const Vector c = fit.Z.row(i).transpose() - mu_z;
      sigma_z.noalias() += c * c.transpose();
    }
  }
  // Truncation at the chi-square cutoff shrinks a normal covariance by
  // P(chi2_{d+2} <= q) / P(chi2_d <= q); undo it.
  sigma_z /= count;
  sigma_z /= chi2_cdf(q, static_cast<int>(d + 2)) / 0.975;

  if (!(sigma_z.diagonal().maxCoeff() > 0.0)) throw Error(ErrorCode::SingularScatter, "score scatter is zero");
  Matrix root, inv_root;
  linalg::symmetric_sqrt(sigma_z, 1e-12, root, inv_root);

  FactorFit out = fit;
  out.mu = fit.mu + fit.B * mu_z;
  out.Z = (fit.Z.rowwise() - mu_z.transpose()) * inv_root;
  out.B = fit.B * root;
  out.sd = out.Z.rowwise().norm();
  out.sd_cutoff = cutoff;
  out.flags.resize(static_cast<std::size_t>(n), ObservationFlag::Regular);
  for (Index i = 0; i < n; ++i) {
    auto& flag = out.flags[static_cast<std::size_t>(i)];
    if (flag == ObservationFlag::OcOutlier) continue;
    flag = out.sd(i) > cutoff ? ObservationFlag::PcOutlier : ObservationFlag::Regular;
  }
  return out;
}

Index resolve_lts_h(Index n, Index d, const FactorOptions& options) {
  const Index floor_h = default_lts_h(n, d);
  if (options.h > 0) return options.h;
  if (options.h_frac > 0.0) {
    const auto requested = static_cast<Index>(std::floor(options.h_frac * static_cast<double>(n)));
    return std::min(std::max(floor_h, requested), n - 1);
  }
  return floor_h;
}

double pc_criterion(const Matrix& data, const FactorFit& fit, Index p) {
  const Index n = data.rows();
  double n_eff = 0.0;
  double resid = 0.0;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (fit.flags[static_cast<std::size_t>(i)] != ObservationFlag::Regular) continue;
    n_eff += 1.0;
    resid += fit.od(i) * fit.od(i);
    total += (data.row(i) - fit.mu.transpose()).squaredNorm();
  }
  if (n_eff == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const auto pd = static_cast<double>(p);
  const double np = n_eff * pd;
  const double penalty = static_cast<double>(fit.d) * ((n_eff + pd) / np) * std::log(np / (n_eff + pd));
  return resid / np + total / np * penalty;
}

FactorFit fit_factor_model_fixed(const Preprojection& pre, Index d, const FactorOptions& options) {
  const Matrix& data = pre.xstar;
  const Index n = data.rows();
  LtsOptions lopt;
  lopt.h = resolve_lts_h(n, d, options);
  lopt.n_starts = options.lts_starts;
  lopt.seed = stream_key(options.seed, kLtsStream, static_cast<std::uint64_t>(d));
  lopt.threads = options.threads;
  const LtsFit lts = fit_lts_subspace(data, d, lopt);

  FactorFit interim;
  interim.d = d;
  interim.h = lopt.h;
  interim.mu = lts.center;
  interim.B = lts.loadings;
  interim.Z = lts.scores;
  interim.od = compute_od(data, interim.mu, interim.B, interim.Z);
  interim.lts = lts.state;

  FactorFit fit = reweight_subspace(data, interim, lopt.h);
  return reweight_scores(fit, stream_key(options.seed, kMcdStream, static_cast<std::uint64_t>(d)), options.mcd_starts);
}

FactorFit back_project(const Preprojection& pre, FactorFit fit) {
  fit.mu = pre.projection * fit.mu + pre.mean;
  fit.B = pre.projection * fit.B;
  return fit;
}

FactorFit select_dimension(const Matrix& x, const FactorOptions& options) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (options.d_max < 1 || options.d_max > std::min(n, p) - 2)
    throw Error(ErrorCode::PreconditionViolated, "d_max must lie in [1, min(n,p)-2]");

  const Preprojection pre = svd_preproject(x);
  std::vector<double> pc(static_cast<std::size_t>(options.d_max), std::numeric_limits<double>::quiet_NaN());
  std::optional<FactorFit> best;
  double best_value = std::numeric_limits<double>::infinity();
  for (Index d = 1; d <= options.d_max; ++d) {
    if (d > pre.rank()) break;
    FactorFit fit;
    try {
      fit = fit_factor_model_fixed(pre, d, options);
    } catch (const Error&) {
      continue;
    }
    const double value = pc_criterion(pre.xstar, fit, p);
    pc[static_cast<std::size_t>(d - 1)] = value;
    if (std::isfinite(value) && value < best_value) {
      best_value = value;
      best = std::move(fit);
    }
  }
  if (!best) throw Error(ErrorCode::NoValidDimension, "no factor dimension in 1..d_max could be fitted");
  best->pc_criterion = pc;
  return back_project(pre, std::move(*best));
}

FactorFit fit_factor_model(const Matrix& x, const FactorOptions& options) {
  if (!options.d) return select_dimension(x, options);
  const Index d = *options.d;
  const Preprojection pre = svd_preproject(x);
  if (d < 1 || d > pre.rank())
    throw Error(ErrorCode::PreconditionViolated, "factor dimension must lie in [1, rank of centred X]");
  return back_project(pre, fit_factor_model_fixed(pre, d, options));
}

}  // namespace rfps
