#pragma once

#include "rfps/regression.hpp"
#include "rfps/screening.hpp"
#include "rfps/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace rfps {

enum class Criterion { Bic, Ebic, Fpbic, RBic, REbic, RFpbic };

inline constexpr std::array<Criterion, 6> kAllCriteria = {Criterion::Bic,  Criterion::Ebic,  Criterion::Fpbic,
                                                          Criterion::RBic, Criterion::REbic, Criterion::RFpbic};

const char* to_string(Criterion criterion);
Criterion parse_criterion(const std::string& name);
bool is_reordered(Criterion criterion);

// M-step refits of the profiled response on the leading path predictors.
struct PathRefits {
  IndexSet rows;                    // i2
  std::vector<Index> predictors;    // first k_max path entries
  RegressionFit empty;              // intercept-only M fit
  std::vector<RegressionFit> fits;  // fits[k-1] uses predictors[0..k)
  std::vector<std::string> warnings;
};

/// Refits for k = 1..k_max over rows i2, warm-started at the marginal slopes
/// with the S-scale of the warm-start residuals held fixed. Truncates at the
/// first k whose weighted design loses rank. Throws PreconditionViolated when
/// k_max > min(|i2|/2, p).
PathRefits refit_path(const SolutionPath& path, Index k_max, std::uint64_t seed = 0);

/// sum_i w_i (y_i - intercept - x_i^T slopes)^2 over `rows`; fit.weights is
/// indexed like `rows`. Rows outside `rows` carry weight zero.
double wrss(const RegressionFit& fit, const Matrix& x_model, const Vector& y, const IndexSet& rows);

/// |M| * P(n, p) / n with P = log n, log n + log p, log n log p.
double penalty(Criterion criterion, Index size, Index n, Index p);

/// log(max(wrss, 1e-300)) + penalty.
double criterion_value(Criterion criterion, double wrss_value, Index size, Index n, Index p);

struct CriterionValue {
  Criterion criterion = Criterion::Bic;
  std::vector<Index> model;  // predictors in path or reordered order
  Vector coefs;              // slopes matching `model`
  double intercept = 0.0;
  double value = 0.0;
  double wrss = 0.0;
  Index k = 0;  // refit the model comes from
  Index l = 0;  // size within the refit (= k for the plain criteria)
  bool perfect_fit = false;
};

/// Minimiser of the criterion over the empty model and the refits (and, for
/// the reordered variants, every nested prefix of each reordered refit).
/// Ties go to (value, size, lexicographic model).
CriterionValue select_model(const SolutionPath& path, const PathRefits& refits, Criterion criterion, Index n, Index p);

struct CriterionTableRow {
  Index k = 0;
  double wrss = 0.0;
  std::array<double, 6> values{};  // in kAllCriteria order; R-variants minimised over l <= k
};

std::vector<CriterionTableRow> criterion_table(const SolutionPath& path, const PathRefits& refits, Index n, Index p);

/// WRSS_(kl), l = 0..k, for the reordered refit k (entry 0 is the intercept
/// only residual under the k-model weights).
std::vector<double> reordered_wrss(const SolutionPath& path, const PathRefits& refits, Index k,
                                   std::vector<Index>* order = nullptr);

Index default_k_max(Index n, Index p);

}  // namespace rfps
