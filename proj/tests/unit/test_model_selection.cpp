#include "doctest.h"
#include "oracles.hpp"

#include "rfps/error.hpp"
#include "rfps/model_selection.hpp"
#include "rfps/robust_stats.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <random>

using namespace rfps;

namespace {

struct Fixture {
  SolutionPath path;
  Vector theta;
  Matrix x;
};

// Independent Gaussian design with a sparse signal on columns {2, 5, 11, 17, 23}; the path is SIS.
Fixture sparse_fixture(std::uint64_t seed, Index n = 200, Index p = 60, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  Fixture f;
  f.x = oracle::gaussian(rng, n, p);
  f.theta = Vector::Zero(p);
  const Index support[] = {2, 5, 11, 17, 23};
  const double values[] = {3.0, -2.5, 2.0, -2.0, 1.8};
  for (int k = 0; k < 5; ++k) f.theta(support[k]) = values[k];
  Vector y = f.x * f.theta + noise * oracle::gaussian(rng, n, 1).col(0);
  for (Index i = 0; i < n / 40; ++i) y(i * 40) += 15.0;
  f.path = sis_path(f.x, y);
  return f;
}

RegressionFit unit_fit(double intercept, const Vector& slopes, Index m) {
  RegressionFit fit;
  fit.intercept = intercept;
  fit.slopes = slopes;
  fit.weights = Vector::Ones(m);
  fit.tuning = kEfficientTuning;
  return fit;
}

}  // namespace

TEST_SUITE("model-selection") {

TEST_CASE("penalties and criterion values") {
  const double ln = std::log(400.0);
  const double lp = std::log(1000.0);
  CHECK(penalty(Criterion::Bic, 3, 400, 1000) == doctest::Approx(3 * ln / 400));
  CHECK(penalty(Criterion::REbic, 3, 400, 1000) == doctest::Approx(3 * (ln + lp) / 400));
  CHECK(penalty(Criterion::Fpbic, 3, 400, 1000) == doctest::Approx(3 * ln * lp / 400));
  CHECK(penalty(Criterion::RBic, 0, 400, 1000) == 0.0);
  CHECK(criterion_value(Criterion::Ebic, 2.5, 4, 100, 50) ==
        doctest::Approx(std::log(2.5) + 4 * (std::log(100.0) + std::log(50.0)) / 100).epsilon(1e-14));
  CHECK(std::isfinite(criterion_value(Criterion::Bic, 0.0, 1, 10, 10)));
  for (Index p : {2, 10, 1000})
    CHECK(penalty(Criterion::Ebic, 1, 50, p) > penalty(Criterion::Bic, 1, 50, p));
  for (auto c : kAllCriteria) {
    CHECK(parse_criterion(to_string(c)) == c);
    CHECK(criterion_value(c, 1.7, 3, 200, 500) < criterion_value(c, 1.7, 5, 200, 500));
  }
  CHECK(parse_criterion("r_ebic") == Criterion::REbic);
  CHECK_THROWS_AS(parse_criterion("aic"), Error);
  CHECK(default_k_max(400, 1000) == 100);
  CHECK(default_k_max(60, 1000) == 30);
  CHECK(default_k_max(400, 12) == 12);
}

TEST_CASE("larger penalties never pick larger models on nested sequences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> w{10.0};
    for (int k = 1; k <= 30; ++k) w.push_back(w.back() * (u(rng) < 0.3 ? 0.5 * u(rng) + 0.2 : 0.98 + 0.02 * u(rng)));
    auto argmin = [&](Criterion c) {
      Index best = 0;
      for (Index k = 1; k <= 30; ++k)
        if (criterion_value(c, w[static_cast<std::size_t>(k)], k, 200, 1000) <
            criterion_value(c, w[static_cast<std::size_t>(best)], best, 200, 1000))
          best = k;
      return best;
    };
    CHECK(argmin(Criterion::Ebic) <= argmin(Criterion::Bic));
    CHECK(argmin(Criterion::Fpbic) <= argmin(Criterion::Ebic));
  }
}

TEST_CASE("weighted residual sum of squares") {
  Matrix x(3, 1);
  x << 1.0, 2.0, 3.0;
  Vector y(3);
  y << 2.0, 5.0, 4.0;
  RegressionFit fit = unit_fit(0.5, Vector::Constant(1, 1.5), 3);
  const IndexSet rows{0, 1, 2};
  // residuals 0, 1.5, -1
  CHECK(wrss(fit, x, y, rows) == doctest::Approx(0.0 + 2.25 + 1.0));
  fit.weights << 1.0, 0.5, 0.0;
  CHECK(wrss(fit, x, y, rows) == doctest::Approx(1.0 * 0.0 + 0.5 * 2.25 + 0.0 * 1.0));
  fit.weights = Vector::Ones(2);
  CHECK(wrss(fit, x, y, IndexSet{1, 2}) == doctest::Approx(3.25));
  const Vector exact = (x.col(0) * 1.5).array() + 0.5;
  fit.weights = Vector::Ones(3);
  CHECK(wrss(fit, x, exact, rows) == 0.0);
}

TEST_CASE("equal WRSS: the smaller model wins under every criterion") {
  std::mt19937_64 rng(4);
  const Index n = 40;
  Matrix x = Matrix::Zero(n, 6);
  x.leftCols(3) = oracle::gaussian(rng, n, 3);
  Vector beta(3);
  beta << 2.0, -1.5, 1.0;
  SolutionPath path;
  path.profiled_x = std::make_shared<const Matrix>(x);
  path.profiled_y = x.leftCols(3) * beta + 0.1 * oracle::gaussian(rng, n, 1).col(0);
  path.order = {0, 1, 2, 3, 4, 5};
  path.slopes = Vector::Zero(6);
  path.i1 = all_indices(n);
  path.i2 = path.i1;

  PathRefits refits;
  refits.rows = path.i2;
  refits.predictors = {0, 1, 2, 3, 4};
  refits.empty = unit_fit(0.0, Vector(), n);
  for (Index k = 1; k <= 5; ++k) {
    Vector s = Vector::Zero(k);
    for (Index j = 0; j < std::min<Index>(k, 3); ++j) s(j) = beta(j);
    refits.fits.push_back(unit_fit(0.0, s, n));
  }
  for (auto c : kAllCriteria) {
    const CriterionValue v = select_model(path, refits, c, n, 6);
    CHECK(v.model.size() == 3);
    std::vector<Index> sorted = v.model;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Index>{0, 1, 2});
  }
}

TEST_CASE("refits, selection and the criterion table") {
  const Fixture f = sparse_fixture(5);
  const Index n = 200;
  const Index p = 60;
  const PathRefits refits = refit_path(f.path, 20, 1);
  REQUIRE(refits.fits.size() == 20);
  CHECK(refits.predictors.size() == 20);

  // k = 1 is the M-step of the top predictor from its marginal slope at the
  // S-scale of the warm-start residuals.
  {
    const Index top = f.path.order[0];
    const Vector y = f.path.profiled_y;
    const Vector xj = f.x.col(top);
    const double slope = f.path.slopes(top);
    std::vector<double> partial;
    for (Index i = 0; i < n; ++i) partial.push_back(y(i) - slope * xj(i));
    const double a = oracle::median(partial);
    for (double& v : partial) v -= a;
    const double s = oracle::mscale(partial, kBreakdownTuning, kBreakdownDelta);
    const RegressionFit direct = m_step(xj, y, a, Vector::Constant(1, slope), s);
    CHECK(std::abs(direct.slopes(0) - refits.fits[0].slopes(0)) < 1e-6);
    CHECK(std::abs(direct.intercept - refits.fits[0].intercept) < 1e-6);
  }

  // Once the true model is inside the refit, its slopes are close to theta.
  {
    Index k_true = 0;
    std::size_t hits = 0;
    while (hits < 5) {
      if (f.theta(f.path.order[static_cast<std::size_t>(k_true)]) != 0.0) ++hits;
      ++k_true;
    }
    REQUIRE(k_true <= 20);
    const RegressionFit& fit = refits.fits[static_cast<std::size_t>(k_true - 1)];
    Matrix a(n, k_true + 1);
    a.col(0).setOnes();
    for (Index j = 0; j < k_true; ++j) a.col(j + 1) = f.x.col(refits.predictors[static_cast<std::size_t>(j)]);
    const Matrix inv = (a.transpose() * a).inverse();
    for (Index j = 0; j < k_true; ++j) {
      const double se = std::sqrt(inv(j + 1, j + 1)) * 1.1;
      CHECK(std::abs(fit.slopes(j) - f.theta(refits.predictors[static_cast<std::size_t>(j)])) < 4.0 * se);
    }
  }

  std::map<Criterion, CriterionValue> chosen;
  for (auto c : kAllCriteria) {
    const CriterionValue v = select_model(f.path, refits, c, n, p);
    chosen[c] = v;
    CHECK(v.value == doctest::Approx(std::log(std::max(v.wrss, 1e-300)) +
                                     static_cast<double>(v.model.size()) * [&] {
                                       const double ln = std::log(200.0);
                                       const double lp = std::log(60.0);
                                       if (c == Criterion::Bic || c == Criterion::RBic) return ln / 200.0;
                                       if (c == Criterion::Ebic || c == Criterion::REbic) return (ln + lp) / 200.0;
                                       return ln * lp / 200.0;
                                     }())
                         .epsilon(1e-10));
    for (Index j : v.model)
      CHECK(std::find(refits.predictors.begin(), refits.predictors.end(), j) != refits.predictors.end());
    std::vector<Index> sorted = v.model;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<Index>{2, 5, 11, 17, 23});
    CHECK_FALSE(v.perfect_fit);
  }
  CHECK(chosen[Criterion::REbic].model.size() <= chosen[Criterion::RBic].model.size());
  CHECK(chosen[Criterion::RFpbic].model.size() <= chosen[Criterion::REbic].model.size());

  // Fixed-weight nested sub-models on this near-orthogonal design.
  for (Index k = 1; k <= 20; ++k) {
    const std::vector<double> table = reordered_wrss(f.path, refits, k);
    REQUIRE(table.size() == static_cast<std::size_t>(k + 1));
    for (std::size_t l = 1; l < table.size(); ++l) CHECK(table[l] <= table[l - 1] * (1 + 1e-12));
    const Matrix xk = [&] {
      Matrix m(n, k);
      for (Index j = 0; j < k; ++j) m.col(j) = f.x.col(refits.predictors[static_cast<std::size_t>(j)]);
      return m;
    }();
    CHECK(table.back() == doctest::Approx(wrss(refits.fits[static_cast<std::size_t>(k - 1)], xk, f.path.profiled_y,
                                               refits.rows))
                              .epsilon(1e-10));
  }

  const auto table = criterion_table(f.path, refits, n, p);
  REQUIRE(table.size() == 21);
  for (std::size_t c = 0; c < kAllCriteria.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : table) best = std::min(best, row.values[c]);
    CHECK(best == doctest::Approx(chosen[kAllCriteria[c]].value).epsilon(1e-12));
  }
}

TEST_CASE("a pure-noise column at the path tail changes nothing") {
  const Fixture f = sparse_fixture(6);
  SolutionPath extended = f.path;
  std::mt19937_64 rng(60);
  Matrix x(200, 61);
  x.leftCols(60) = *f.path.profiled_x;
  x.col(60) = oracle::gaussian(rng, 200, 1).col(0);
  extended.profiled_x = std::make_shared<const Matrix>(x);
  extended.order.push_back(60);
  extended.slopes.conservativeResize(61);
  extended.slopes(60) = 0.0;
  const PathRefits a = refit_path(f.path, 15, 2);
  const PathRefits b = refit_path(extended, 15, 2);
  for (auto c : kAllCriteria) {
    const CriterionValue va = select_model(f.path, a, c, 200, 60);
    const CriterionValue vb = select_model(extended, b, c, 200, 61);
    CHECK(va.model == vb.model);
  }
}

TEST_CASE("k_max is bounded by half the screened rows") {
  const Fixture f = sparse_fixture(7, 40, 60);
  try {
    refit_path(f.path, 21);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolated);
  }
  CHECK_THROWS_AS(refit_path(f.path, 0), Error);
  CHECK(refit_path(f.path, 20).fits.size() <= 20);
}

TEST_CASE("an exact predictor is selected by every criterion") {
  std::mt19937_64 rng(8);
  const Matrix x = oracle::gaussian(rng, 30, 10);
  const Vector y = 2.0 * x.col(4);
  const SolutionPath path = sis_path(x, y);
  const PathRefits refits = refit_path(path, 5);
  for (auto c : kAllCriteria) {
    const CriterionValue v = select_model(path, refits, c, 30, 10);
    CHECK(std::find(v.model.begin(), v.model.end(), 4) != v.model.end());
  }
}

}  // TEST_SUITE
