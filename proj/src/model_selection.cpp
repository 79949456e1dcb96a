#include "rfps/model_selection.hpp"
#include "rfps/error.hpp"
#include "rfps/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfps {

namespace {

constexpr std::uint64_t kEmptyStream = 0x454D5054;  // "EMPT"
constexpr double kWrssFloor = 1e-300;

struct Candidate {
  double value = std::numeric_limits<double>::infinity();
  std::vector<Index> model;
  std::vector<Index> sorted_model;
  Vector coefs;
  double intercept = 0.0;
  double wrss = 0.0;
  Index k = 0;
  Index l = 0;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value < b.value;
  if (a.model.size() != b.model.size()) return a.model.size() < b.model.size();
  return a.sorted_model < b.sorted_model;
}

Matrix model_columns(const SolutionPath& path, const std::vector<Index>& predictors, Index k) {
  const Matrix& x = *path.profiled_x;
  Matrix out(x.rows(), k);
  for (Index j = 0; j < k; ++j) out.col(j) = x.col(predictors[static_cast<std::size_t>(j)]);
  return out;
}

Candidate make_candidate(std::vector<Index> model, Vector coefs, double intercept, double w, Index k, Index l,
                         Criterion criterion, Index n, Index p) {
  Candidate c;
  c.value = criterion_value(criterion, w, static_cast<Index>(model.size()), n, p);
  c.sorted_model = model;
  std::sort(c.sorted_model.begin(), c.sorted_model.end());
  c.model = std::move(model);
  c.coefs = std::move(coefs);
  c.intercept = intercept;
  c.wrss = w;
  c.k = k;
  c.l = l;
  return c;
}

}  // namespace

const char* to_string(Criterion criterion) {
  switch (criterion) {
    case Criterion::Bic: return "BIC";
    case Criterion::Ebic: return "EBIC";
    case Criterion::Fpbic: return "FPBIC";
    case Criterion::RBic: return "R-BIC";
    case Criterion::REbic: return "R-EBIC";
    case Criterion::RFpbic: return "R-FPBIC";
  }
  return "unknown";
}

Criterion parse_criterion(const std::string& name) {
  std::string key;
  for (char ch : name)
    if (ch != '-' && ch != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (key == "bic") return Criterion::Bic;
  if (key == "ebic") return Criterion::Ebic;
  if (key == "fpbic") return Criterion::Fpbic;
  if (key == "rbic") return Criterion::RBic;
  if (key == "rebic") return Criterion::REbic;
  if (key == "rfpbic") return Criterion::RFpbic;
  throw Error(ErrorCode::Parse, "unknown criterion '" + name + "'");
}

bool is_reordered(Criterion criterion) {
  return criterion == Criterion::RBic || criterion == Criterion::REbic || criterion == Criterion::RFpbic;
}

Index default_k_max(Index n, Index p) { return std::min({n / 2, Index{100}, p}); }

double penalty(Criterion criterion, Index size, Index n, Index p) {
  const double ln = std::log(static_cast<double>(n));
  const double lp = std::log(static_cast<double>(p));
  double per = 0.0;
  switch (criterion) {
    case Criterion::Bic:
    case Criterion::RBic: per = ln; break;
    case Criterion::Ebic:
    case Criterion::REbic: per = ln + lp; break;
    case Criterion::Fpbic:
    case Criterion::RFpbic: per = ln * lp; break;
  }
  return static_cast<double>(size) * per / static_cast<double>(n);
}

double criterion_value(Criterion criterion, double wrss_value, Index size, Index n, Index p) {
  return std::log(std::max(wrss_value, kWrssFloor)) + penalty(criterion, size, n, p);
}

double wrss(const RegressionFit& fit, const Matrix& x_model, const Vector& y, const IndexSet& rows) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index row = rows[i];
    double r = y(row) - fit.intercept;
    if (fit.slopes.size() > 0) r -= x_model.row(row).dot(fit.slopes);
    acc += fit.weights(static_cast<Index>(i)) * r * r;
  }
  return acc;
}

PathRefits refit_path(const SolutionPath& path, Index k_max, std::uint64_t seed) {
  const Index p = path.slopes.size();
  const auto m = static_cast<Index>(path.i2.size());
  if (k_max < 1 || k_max > std::min(m / 2, p))
    throw Error(ErrorCode::PreconditionViolated,
                "k_max = " + std::to_string(k_max) + " exceeds min(|i2|/2, p) = " + std::to_string(std::min(m / 2, p)));

  PathRefits out;
  out.rows = path.i2;
  out.predictors.assign(path.order.begin(), path.order.begin() + k_max);
  const Vector y = select_rows(path.profiled_y, out.rows);

  {
    SOptions sopt;
    sopt.seed = stream_key(seed, kEmptyStream);
    out.empty = mm_estimator(Matrix(m, 0), y, sopt);
  }

  const Matrix x_all = select_rows(model_columns(path, out.predictors, k_max), out.rows);
  for (Index k = 1; k <= k_max; ++k) {
    const Matrix xk = x_all.leftCols(k);
    Vector start(k);
    for (Index j = 0; j < k; ++j) start(j) = path.slopes(out.predictors[static_cast<std::size_t>(j)]);
    const Vector partial = y - xk * start;
    const double intercept = median(as_span(partial));
    const Vector r = partial.array() - intercept;
    const double scale = mscale(as_span(r));
    if (!(scale > 0.0)) {
      RegressionFit exact;
      exact.intercept = intercept;
      exact.slopes = start;
      exact.weights = (r.array() == 0.0).cast<double>();
      exact.tuning = kEfficientTuning;
      exact.converged = true;
      out.warnings.push_back("k = " + std::to_string(k) + ": warm start fits exactly");
      out.fits.push_back(std::move(exact));
      continue;
    }
    try {
      out.fits.push_back(m_step(xk, y, intercept, start, scale));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficientWeighted) throw;
      out.warnings.push_back("k = " + std::to_string(k) + ": " + e.what() + "; path truncated at k = " +
                             std::to_string(k - 1));
      break;
    }
  }
  return out;
}

std::vector<double> reordered_wrss(const SolutionPath& path, const PathRefits& refits, Index k,
                                   std::vector<Index>* order) {
  const RegressionFit& fit = refits.fits[static_cast<std::size_t>(k - 1)];
  std::vector<Index> pos(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) pos[static_cast<std::size_t>(j)] = j;
  std::stable_sort(pos.begin(), pos.end(),
                   [&](Index a, Index b) { return std::abs(fit.slopes(a)) > std::abs(fit.slopes(b)); });
  if (order) *order = pos;

  const Matrix& x = *path.profiled_x;
  const auto m = static_cast<Index>(refits.rows.size());
  Vector r(m);
  for (Index i = 0; i < m; ++i) r(i) = path.profiled_y(refits.rows[static_cast<std::size_t>(i)]) - fit.intercept;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(k + 1));
  out.push_back(fit.weights.dot(r.cwiseAbs2()));
  for (Index l = 0; l < k; ++l) {
    const Index j = pos[static_cast<std::size_t>(l)];
    const Index col = refits.predictors[static_cast<std::size_t>(j)];
    const double coef = fit.slopes(j);
    for (Index i = 0; i < m; ++i) r(i) -= coef * x(refits.rows[static_cast<std::size_t>(i)], col);
    out.push_back(fit.weights.dot(r.cwiseAbs2()));
  }
  return out;
}

CriterionValue select_model(const SolutionPath& path, const PathRefits& refits, Criterion criterion, Index n, Index p) {
  const Vector y = path.profiled_y;
  const Matrix& x = *path.profiled_x;

  Candidate best;
  auto consider = [&](Candidate c) {
    if (candidate_less(c, best)) best = std::move(c);
  };

  consider(make_candidate({}, Vector(), refits.empty.intercept, wrss(refits.empty, x, y, refits.rows), 0, 0, criterion,
                          n, p));

  const auto kk = static_cast<Index>(refits.fits.size());
  for (Index k = 1; k <= kk; ++k) {
    const RegressionFit& fit = refits.fits[static_cast<std::size_t>(k - 1)];
    if (!is_reordered(criterion)) {
      std::vector<Index> model(refits.predictors.begin(), refits.predictors.begin() + k);
      const Matrix xk = model_columns(path, refits.predictors, k);
      const double w = wrss(fit, xk, y, refits.rows);
      consider(make_candidate(std::move(model), fit.slopes, fit.intercept, w, k, k, criterion, n, p));
      continue;
    }
    std::vector<Index> order;
    const std::vector<double> table = reordered_wrss(path, refits, k, &order);
    for (Index l = 1; l <= k; ++l) {
      std::vector<Index> model(static_cast<std::size_t>(l));
      Vector coefs(l);
      for (Index j = 0; j < l; ++j) {
        const Index pos = order[static_cast<std::size_t>(j)];
        model[static_cast<std::size_t>(j)] = refits.predictors[static_cast<std::size_t>(pos)];
        coefs(j) = fit.slopes(pos);
      }
      consider(make_candidate(std::move(model), std::move(coefs), fit.intercept, table[static_cast<std::size_t>(l)], k,
                              l, criterion, n, p));
    }
  }

  CriterionValue out;
  out.criterion = criterion;
  out.model = std::move(best.model);
  out.coefs = std::move(best.coefs);
  out.intercept = best.intercept;
  out.value = best.value;
  out.wrss = best.wrss;
  out.k = best.k;
  out.l = best.l;
  out.perfect_fit = best.wrss < kWrssFloor;
  return out;
}

std::vector<CriterionTableRow> criterion_table(const SolutionPath& path, const PathRefits& refits, Index n, Index p) {
  const Vector& y = path.profiled_y;
  std::vector<CriterionTableRow> rows;
  const auto kk = static_cast<Index>(refits.fits.size());
  for (Index k = 0; k <= kk; ++k) {
    CriterionTableRow row;
    row.k = k;
    if (k == 0) {
      row.wrss = wrss(refits.empty, *path.profiled_x, y, refits.rows);
      for (std::size_t c = 0; c < kAllCriteria.size(); ++c)
        row.values[c] = criterion_value(kAllCriteria[c], row.wrss, 0, n, p);
      rows.push_back(row);
      continue;
    }
    const RegressionFit& fit = refits.fits[static_cast<std::size_t>(k - 1)];
    row.wrss = wrss(fit, model_columns(path, refits.predictors, k), y, refits.rows);
    const std::vector<double> table = reordered_wrss(path, refits, k);
    for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
      const Criterion crit = kAllCriteria[c];
      if (!is_reordered(crit)) {
        row.values[c] = criterion_value(crit, row.wrss, k, n, p);
        continue;
      }
      double v = std::numeric_limits<double>::infinity();
      for (Index l = 1; l <= k; ++l)
        v = std::min(v, criterion_value(crit, table[static_cast<std::size_t>(l)], l, n, p));
      row.values[c] = v;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rfps
