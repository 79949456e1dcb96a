#pragma once

#include "rfps/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rfps {

enum class ObservationFlag { Regular, PcOutlier, OcOutlier };

const char* to_string(ObservationFlag flag);

// Representation of the rows of X in the affine span of the data:
// X = Xstar * P^T + 1 * mean^T.
struct Preprojection {
  Matrix xstar;       // n x r
  Matrix projection;  // p x r, orthonormal columns
  Vector mean;        // p
  Index rank() const { return xstar.cols(); }
};

Preprojection svd_preproject(const Matrix& x);

struct LtsOptions {
  Index h = 0;  // 0 selects floor((n-d+2)/2)
  int n_starts = 100;
  int n_init_steps = 2;
  int n_keep = 10;
  int max_csteps = 100;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct LtsState {
  IndexSet subset;
  double objective = 0.0;
  // Objective after every C-step of the winning start.
  std::vector<double> trace;
};

struct LtsFit {
  Matrix scores;    // n x d, Z^T Z / n = I
  Matrix loadings;  // r x d
  Vector center;    // r
  LtsState state;
};

Index default_lts_h(Index n, Index d);

/// Trimmed rank-d least squares subspace by C-steps from random (d+1)-row
/// starts. Throws BadTrim and RankDeficientSubset.
LtsFit fit_lts_subspace(const Matrix& data, Index d, const LtsOptions& options = {});

/// Yeo-Johnson transform psi(lambda, d), lambda in [0, 2].
double yeo_johnson(double lambda, double d);

struct LambdaSelection {
  double lambda = 1.0;
  Vector transformed;       // psi(lambda, d_i)
  double od_location = 0.0;  // median of od
  double od_scale = 0.0;     // Qn of od
  std::vector<double> grid;
  std::vector<double> trimmed_likelihood;
};

/// Trimmed-likelihood choice of lambda on {0, 0.02, ..., 1} for the
/// median/Qn standardised distances. Throws InsufficientData, ZeroScale.
LambdaSelection select_lambda(const Vector& od, Index h);

/// Sum of the h largest log-likelihood contributions at lambda.
double trimmed_log_likelihood(const Vector& standardized, double lambda, Index h);

struct FactorFit {
  Vector mu;  // p
  Matrix B;   // p x d
  Matrix Z;   // n x d
  Index d = 0;
  Index h = 0;
  Vector od;
  Vector sd;
  Vector transformed_od;
  std::vector<ObservationFlag> flags;
  double lambda_opt = 1.0;
  double od_cutoff = 0.0;  // on the transformed scale
  double sd_cutoff = 0.0;
  LtsState lts;
  // PC(d) for d = 1..d_max when the dimension was selected; NaN for failed d.
  std::vector<double> pc_criterion;

  IndexSet rows_with(ObservationFlag flag) const;
  Matrix fitted() const;  // 1 mu^T + Z B^T
};

/// Flags OC outliers from the transformed od, refits the subspace by least
/// squares on the remaining rows, recomputes od and flags once more with the
/// original lambda. `fit` must hold mu, B, Z, od in the coordinates of `data`.
/// Throws AllFlagged.
FactorFit reweight_subspace(const Matrix& data, const FactorFit& fit, Index h);

/// Reweighted MCD on the scores, then re-centre and whiten the scores and
/// flag PC outliers. Fitted values are unchanged. Throws SingularScatter.
FactorFit reweight_scores(const FactorFit& fit, std::uint64_t mcd_seed, int mcd_starts = 500);

struct FactorOptions {
  std::optional<Index> d;  // nullopt selects d by the PC criterion
  Index d_max = 10;
  Index h = 0;          // explicit trimming count; 0 uses h_frac or the default
  double h_frac = 0.0;  // h = max(default, floor(h_frac * n)) when > 0
  int lts_starts = 100;
  int mcd_starts = 500;
  std::uint64_t seed = 0;
  int threads = 1;
};

Index resolve_lts_h(Index n, Index d, const FactorOptions& options);

/// PC(d) of a fit (any coordinates; `p` is the original column count).
double pc_criterion(const Matrix& data, const FactorFit& fit, Index p);

/// Full robust fit for fixed d on preprojected data, in r coordinates.
FactorFit fit_factor_model_fixed(const Preprojection& pre, Index d, const FactorOptions& options);

/// Runs the fixed-d fit for d = 1..d_max and returns the PC(d) minimiser
/// (back-projected). Throws NoValidDimension.
FactorFit select_dimension(const Matrix& x, const FactorOptions& options);

/// Complete robust factor fit in the original coordinates.
FactorFit fit_factor_model(const Matrix& x, const FactorOptions& options = {});

/// Maps an r-coordinate fit back to the original p coordinates.
FactorFit back_project(const Preprojection& pre, FactorFit fit);

}  // namespace rfps
