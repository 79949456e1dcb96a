#pragma once

#include "rfps/factor_model.hpp"
#include "rfps/regression.hpp"
#include "rfps/robust_stats.hpp"
#include "rfps/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rfps {

enum class ScreeningMethod { Sis, Fpsis, Rfpsis };
enum class ObservationLabel { Regular, Lmv, PcGoodLeverage, PcBadLeverage, OcOutlier };

const char* to_string(ScreeningMethod method);
const char* to_string(ObservationLabel label);
ScreeningMethod parse_method(const std::string& name);

struct OutlierReport {
  std::vector<ObservationLabel> labels;
  Vector od;
  Vector sd;
  Vector t;  // standardized residual of the initial response fit
};

struct SolutionPath {
  ScreeningMethod method = ScreeningMethod::Sis;
  std::vector<Index> order;  // predictors by decreasing |slope|, ties by index
  Vector slopes;
  IndexSet i1;
  IndexSet i2;
  Vector profiled_y;
  std::shared_ptr<const Matrix> profiled_x;
  Index d = 0;
  std::optional<FactorFit> factor;
  std::optional<OutlierReport> report;
  std::vector<std::string> warnings;
};

/// Columnwise (x - location) / scale. A robust column with zero Qn falls back
/// to its sd; a constant column becomes zero. `scales` receives the values
/// used.
Matrix standardize_columns(const Matrix& x, ScaleEstimator estimator, std::vector<RobustScale>* scales = nullptr);

/// Indices ordered by decreasing |value|, ties by ascending index.
std::vector<Index> order_by_magnitude(const Vector& values);

/// Marginal least-squares slopes X_j^T y / X_j^T X_j on standardized data.
/// Throws ZeroVarianceColumn.
SolutionPath sis_path(const Matrix& x, const Vector& y);

/// Classical factor profiling with the leading eigenvectors of X X^T, then
/// marginal slopes. d = nullopt picks d by the unweighted PC criterion;
/// d = 0 reduces to SIS.
SolutionPath fpsis_path(const Matrix& x, const Vector& y, std::optional<Index> d, Index d_max = 10);

struct ResponseProfile {
  Vector gamma;
  double mu_y = 0.0;
  Vector profiled_y;
  IndexSet i1;
  IndexSet i2;
  OutlierReport report;
  RegressionFit initial_fit;
  RegressionFit fit;
};

/// Robust regression of y on the factor scores over regular rows, with PC
/// outliers re-admitted when their standardized residual is small. Throws
/// TooFewRegularRows.
ResponseProfile profile_response(const Vector& y, const FactorFit& fit, std::uint64_t seed);

struct RfpsisOptions {
  FactorOptions factor;
  std::uint64_t seed = 0;
  int marginal_starts = 50;
  int threads = 1;
};

/// Robust factor profiled screening on raw data.
SolutionPath rfpsis_path(const Matrix& x, const Vector& y, const RfpsisOptions& options = {});

struct ScreeningOptions {
  ScreeningMethod method = ScreeningMethod::Rfpsis;
  std::optional<Index> d;  // nullopt: select
  Index d_max = 10;
  double h_frac = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Runs a method on raw data, applying the standardization that method
/// expects.
SolutionPath screen(const Matrix& x, const Vector& y, const ScreeningOptions& options);

}  // namespace rfps
