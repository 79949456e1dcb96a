#include "doctest.h"
#include "oracles.hpp"

#include "rfps/error.hpp"
#include "rfps/mcd.hpp"

#include <cmath>
#include <random>

using namespace rfps;

TEST_SUITE("mcd") {

TEST_CASE("univariate fit equals the best contiguous window") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    const Index n = 10 + static_cast<Index>(rng() % 20);
    Matrix x = oracle::gaussian(rng, n, 1);
    for (Index i = 0; i < n / 5; ++i) x(i, 0) += 20.0;
    const McdFit fit = fit_mcd(x);
    const std::vector<double> xs(x.data(), x.data() + n);
    const auto h = static_cast<int>(default_mcd_h(n, 1));
    const oracle::Window w = oracle::mcd_window(xs, h);
    CHECK(fit.h == h);
    CHECK(IndexSet(w.rows.begin(), w.rows.end()) == fit.raw_subset);
    CHECK(fit.raw_location(0) == doctest::Approx(w.mean).epsilon(1e-12));
    std::vector<double> sq;
    for (double v : xs) sq.push_back((v - w.mean) * (v - w.mean));
    const double consistency = oracle::median(sq) / w.variance / oracle::chi2_quantile(0.5, 1);
    CHECK(fit.raw_scatter(0, 0) == doctest::Approx(w.variance * consistency).epsilon(1e-9));
  }
}

TEST_CASE("identical rows are degenerate") {
  Matrix x = Matrix::Ones(12, 2);
  CHECK_THROWS_AS(fit_mcd(x), Error);
  try {
    fit_mcd(x);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateScatter);
  }
  Matrix u = Matrix::Constant(12, 1, 3.0);
  CHECK_THROWS_AS(fit_mcd(u), Error);
}

TEST_CASE("subset size is validated") {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::gaussian(rng, 20, 2);
  McdOptions o;
  o.h = 5;
  CHECK_THROWS_AS(fit_mcd(x, o), Error);
  o.h = 21;
  CHECK_THROWS_AS(fit_mcd(x, o), Error);
  CHECK_THROWS_AS(fit_mcd(oracle::gaussian(rng, 2, 2)), Error);
}

TEST_CASE("clean bivariate normal location near the origin") {
  std::mt19937_64 rng(2024);
  const Matrix x = oracle::gaussian(rng, 500, 2);
  McdOptions o;
  o.seed = 7;
  const McdFit fit = fit_mcd(x, o);
  CHECK(fit.location.norm() < 0.15);
  CHECK(static_cast<Index>(fit.raw_subset.size()) == fit.h);
  CHECK((fit.scatter - fit.scatter.transpose()).norm() == doctest::Approx(0.0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(fit.scatter);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  CHECK(fit.robust_distances.allFinite());
  CHECK((fit.scatter - Matrix::Identity(2, 2)).norm() < 0.3);
}

TEST_CASE("C-steps never increase the determinant") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Matrix x = oracle::gaussian(rng, 60, 3);
    x.topRows(12).array() += 6.0;
    McdOptions o;
    o.seed = static_cast<std::uint64_t>(rep);
    o.n_starts = 50;
    const McdFit fit = fit_mcd(x, o);
    for (std::size_t i = 1; i < fit.cstep_trace.size(); ++i)
      CHECK(fit.cstep_trace[i] <= fit.cstep_trace[i - 1] + 1e-12);

    IndexSet subset;
    for (Index i = 0; i < 33; ++i) subset.push_back(2 * i % 60);
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    subset.resize(32);
    double prev = std::numeric_limits<double>::infinity();
    for (int step = 0; step < 10; ++step) {
      IndexSet next;
      double ld = 0.0;
      REQUIRE(mcd_cstep(x, subset, 32, next, ld));
      CHECK(ld <= prev + 1e-12);
      prev = ld;
      subset = next;
    }
  }
}

TEST_CASE("affine equivariance with identical subset draws") {
  std::mt19937_64 rng(33);
  const Matrix x = oracle::gaussian(rng, 80, 2);
  Matrix a(2, 2);
  a << 2.0, 0.5, -1.0, 3.0;
  const Vector b = Vector::LinSpaced(2, -4.0, 7.0);
  const Matrix y = (x * a.transpose()).rowwise() + b.transpose();
  McdOptions o;
  o.seed = 4;
  const McdFit fx = fit_mcd(x, o);
  const McdFit fy = fit_mcd(y, o);
  CHECK(fx.raw_subset == fy.raw_subset);
  CHECK((fy.location - (a * fx.location + b)).norm() < 1e-9);
  CHECK((fy.scatter - a * fx.scatter * a.transpose()).norm() < 1e-9);
  CHECK((fy.robust_distances - fx.robust_distances).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("raw subset distances are bounded by the sample maximum") {
  std::mt19937_64 rng(12);
  Matrix x = oracle::gaussian(rng, 100, 2);
  x.topRows(15).array() += 8.0;
  const McdFit fit = fit_mcd(x);
  const double max_rd = fit.robust_distances.maxCoeff();
  for (Index i : fit.raw_subset) {
    CHECK(fit.robust_distances(i) <= max_rd);
    CHECK(i >= 15);
  }
}

}  // TEST_SUITE
