#include "doctest.h"
#include "oracles.hpp"

#include "rfps/error.hpp"
#include "rfps/robust_stats.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace rfps;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

}  // namespace

TEST_SUITE("robust-stats") {

TEST_CASE("median of odd, even and empty samples") {
  CHECK(median(std::vector<double>{1, 2, 3}) == 2.0);
  CHECK(median(std::vector<double>{1, 2, 3, 4}) == 2.5);
  CHECK(median(std::vector<double>{4, 1, 3, 2}) == 2.5);
  CHECK_THROWS_AS(median(std::vector<double>{}), Error);
  try {
    median(std::vector<double>{});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}

TEST_CASE("median and Qn are permutation invariant and equivariant") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng() % 40;
    std::vector<double> x = draw(rng, n);
    const double a = std::uniform_real_distribution<double>(-5, 5)(rng);
    const double b = std::uniform_real_distribution<double>(-50, 50)(rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
    CHECK(median(y) == doctest::Approx(a * median(x) + b).epsilon(1e-12));
    CHECK(qn_scale(y) == doctest::Approx(std::abs(a) * qn_scale(x)).epsilon(1e-10));
    std::vector<double> perm = x;
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(median(perm) == median(x));
    CHECK(qn_scale(perm) == qn_scale(x));
  }
}

TEST_CASE("Qn matches the pairwise order-statistic definition") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 2 + rng() % 60;
    const std::vector<double> x = draw(rng, n, 3.0);
    CHECK(qn_scale(x) == doctest::Approx(oracle::qn(x)).epsilon(1e-14));
  }
  CHECK(qn_scale(std::vector<double>{5, 5, 5, 5}) == 0.0);
  CHECK_THROWS_AS(qn_scale(std::vector<double>{1.0}), Error);
}

TEST_CASE("location_scale pairs") {
  const std::vector<double> x = {1, 2, 3, 4, 10};
  const RobustScale r = location_scale(x, ScaleEstimator::MedianQn);
  CHECK(r.location == 3.0);
  CHECK(r.scale == doctest::Approx(oracle::qn(x)));
  const RobustScale c = location_scale(x, ScaleEstimator::MeanSd);
  CHECK(c.location == doctest::Approx(4.0));
  CHECK(c.scale == doctest::Approx(std::sqrt(50.0 / 4.0)));
  CHECK(location_scale(std::vector<double>{2, 2, 2}, ScaleEstimator::MeanSd).scale == 0.0);
}

TEST_CASE("contamination below half leaves median and Qn bounded") {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 5 + rng() % 30;
    std::vector<double> x = draw(rng, n);
    double max_abs = 0.0;
    for (double v : x) max_abs = std::max(max_abs, std::abs(v));
    const std::size_t bad = (n - 1) / 2;
    for (std::size_t i = 0; i < bad; ++i) x[i] = (i % 2 ? -1e9 : 1e9);
    CHECK(std::abs(median(x)) <= max_abs);
    CHECK(qn_scale(x) <= 2.2219 * 2.0 * max_abs + 1e-12);
  }
}

TEST_CASE("bisquare rho boundary values and errors") {
  CHECK(bisquare_rho(0.0, 4.685) == 0.0);
  CHECK(bisquare_rho(4.685, 4.685) == 1.0);
  CHECK(bisquare_rho(-10.0, 4.685) == 1.0);
  CHECK_THROWS_AS(bisquare_rho(1.0, 0.0), Error);
  CHECK_THROWS_AS(bisquare_psi(1.0, -1.0), Error);
}

TEST_CASE("bisquare psi is the derivative of rho") {
  const double h = 1e-6;
  CHECK(bisquare_psi(1.0, 4.685) ==
        doctest::Approx((bisquare_rho(1.0 + h, 4.685) - bisquare_rho(1.0 - h, 4.685)) / (2 * h)).epsilon(1e-6));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 100; ++i) {
    const double c = 4.685;
    const double x = u(rng);
    const double fd = (bisquare_rho(x + h, c) - bisquare_rho(x - h, c)) / (2 * h);
    CHECK(std::abs(bisquare_psi(x, c) - fd) <= 1e-6);
    CHECK(bisquare_rho(x, c) == bisquare_rho(-x, c));
    CHECK(bisquare_psi(x, c) == -bisquare_psi(-x, c));
    CHECK(bisquare_rho(x, c) == doctest::Approx(oracle::bisquare_rho(x, c)).epsilon(1e-14));
    if (std::abs(x) >= c) {
      CHECK(bisquare_psi(x, c) == 0.0);
      CHECK(bisquare_weight(x, c) == 0.0);
    } else if (x != 0.0) {
      CHECK(bisquare_weight(x, c) == doctest::Approx(bisquare_psi(x, c) / x * c * c / 6.0));
    }
    const double y = std::abs(x) + std::abs(u(rng));
    CHECK(bisquare_rho(y, c) >= bisquare_rho(x, c));
  }
}

TEST_CASE("mscale special cases and the bisection oracle") {
  CHECK(mscale(std::vector<double>{0, 0, 0, 0}) == 0.0);
  CHECK(mscale(std::vector<double>{0, 0, 0, 1}) == 0.0);
  for (double r : {0.1, 1.0, 7.5}) {
    const std::vector<double> res = {r, -r, r, -r};
    const double s = mscale(res);
    CHECK(s == doctest::Approx(oracle::mscale(res, kBreakdownTuning, kBreakdownDelta)).epsilon(1e-9));
    CHECK(bisquare_rho(r / s, kBreakdownTuning) == doctest::Approx(kBreakdownDelta).epsilon(1e-9));
  }
  CHECK_THROWS_AS(mscale(std::vector<double>{}), Error);
  CHECK_THROWS_AS(mscale(std::vector<double>{1, 2}, 1.0, 1.5), Error);
}

TEST_CASE("mscale is a scale-equivariant fixed point") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 3 + rng() % 80;
    std::vector<double> r = draw(rng, n, 2.0);
    const double s = mscale(r);
    REQUIRE(s > 0.0);
    double mean_rho = 0.0;
    for (double v : r) mean_rho += bisquare_rho(v / s, kBreakdownTuning);
    CHECK(std::abs(mean_rho / static_cast<double>(n) - kBreakdownDelta) <= 1e-8);
    CHECK(s == doctest::Approx(oracle::mscale(r, kBreakdownTuning, kBreakdownDelta)).epsilon(1e-8));
    const double a = -3.5;
    for (double& v : r) v *= a;
    CHECK(mscale(r) == doctest::Approx(std::abs(a) * s).epsilon(1e-9));
  }
}

TEST_CASE("chi-square and normal quantiles") {
  CHECK(chi2_quantile(0.975, 1) == doctest::Approx(5.023886187).epsilon(1e-9));
  CHECK(chi2_quantile(0.5, 2) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(chi2_quantile(0.975, 5) == doctest::Approx(12.83250199).epsilon(1e-9));
  for (int df = 1; df <= 12; ++df)
    for (double p : {0.01, 0.25, 0.5, 0.9, 0.975, 0.999}) {
      CHECK(chi2_quantile(p, df) == doctest::Approx(oracle::chi2_quantile(p, df)).epsilon(1e-8));
      CHECK(chi2_cdf(oracle::chi2_quantile(p, df), df) == doctest::Approx(p).epsilon(1e-9));
    }
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-9));
  for (double p : {0.001, 0.2, 0.5, 0.7, 0.999})
    CHECK(normal_quantile(p) == doctest::Approx(oracle::normal_quantile(p)).epsilon(1e-9));
  CHECK(std::sqrt(chi2_quantile(0.975, 1)) == doctest::Approx(2.241402728).epsilon(1e-9));
  CHECK_THROWS_AS(chi2_quantile(1.0, 2), Error);
  CHECK_THROWS_AS(chi2_quantile(0.5, 0), Error);
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
}

TEST_CASE("sample quantile matches order statistics") {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const std::vector<double> x = draw(rng, 1 + rng() % 30);
    for (double p : {0.0, 0.05, 0.5, 0.95, 1.0}) CHECK(quantile(x, p) == doctest::Approx(oracle::quantile(x, p)));
  }
}

}  // TEST_SUITE
