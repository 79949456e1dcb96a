#include "linalg.hpp"
#include "rfps/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rfps::linalg {

namespace {

constexpr Index kDenseCutoff = 48;

// Number of eigenvalues of the tridiagonal (a, b) strictly below x.
Index sturm_count(const Vector& a, const Vector& b, double x, double pivmin) {
  Index count = 0;
  double q = a(0) - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0.0) ++count;
  for (Index i = 1; i < a.size(); ++i) {
    q = a(i) - x - b(i - 1) * b(i - 1) / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
  }
  return count;
}

// k-th smallest eigenvalue (0-based) by bisection.
double bisect(const Vector& a, const Vector& b, Index k, double lo, double hi, double pivmin) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)) + pivmin) break;
    if (sturm_count(a, b, mid, pivmin) > k) hi = mid;
    else lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Solves (T - shift) x = rhs in place with partial pivoting.
void tridiagonal_solve(const Vector& a, const Vector& b, double shift, double tiny, Vector& rhs) {
  const Index n = a.size();
  Vector diag = a.array() - shift;
  Vector upper(n), upper2 = Vector::Zero(n), lower(n);
  for (Index i = 0; i + 1 < n; ++i) upper(i) = b(i);
  upper(n - 1) = 0.0;
  std::vector<char> swapped(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i + 1 < n; ++i) {
    const double sub = b(i);
    if (std::abs(diag(i)) >= std::abs(sub)) {
      if (diag(i) == 0.0) diag(i) = tiny;
      lower(i) = sub / diag(i);
      diag(i + 1) -= lower(i) * upper(i);
    } else {
      swapped[static_cast<std::size_t>(i)] = 1;
      lower(i) = diag(i) / sub;
      diag(i) = sub;
      const double u = upper(i);
      upper(i) = diag(i + 1);
      upper2(i) = (i + 2 < n) ? upper(i + 1) : 0.0;
      diag(i + 1) = u - lower(i) * upper(i);
      if (i + 2 < n) upper(i + 1) = -lower(i) * upper2(i);
      std::swap(rhs(i), rhs(i + 1));
    }
    rhs(i + 1) -= lower(i) * rhs(i);
  }
  if (diag(n - 1) == 0.0) diag(n - 1) = tiny;
  for (Index i = n - 1; i >= 0; --i) {
    double v = rhs(i);
    if (i + 1 < n) v -= upper(i) * rhs(i + 1);
    if (i + 2 < n) v -= upper2(i) * rhs(i + 2);
    const double p = std::abs(diag(i)) < tiny ? std::copysign(tiny, diag(i) == 0.0 ? 1.0 : diag(i)) : diag(i);
    rhs(i) = v / p;
  }
}

}  // namespace

EigenPairs top_eigenpairs(const Matrix& sym, Index count) {
  const Index n = sym.rows();
  if (count < 1 || count > n) throw Error(ErrorCode::PreconditionViolated, "eigenpair count out of range");

  EigenPairs out;
  if (n <= kDenseCutoff || 4 * count > n) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "symmetric eigensolver failed");
    out.values = es.eigenvalues().tail(count).reverse();
    out.vectors = es.eigenvectors().rightCols(count).rowwise().reverse();
    return out;
  }

  // Tridiagonalise, bisect for the wanted eigenvalues, inverse iteration on
  // the tridiagonal, then apply the Householder reflectors.
  const Eigen::Tridiagonalization<Matrix> tri(sym);
  const Vector a = tri.diagonal();
  const Vector b = tri.subDiagonal();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Index i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(b(i - 1)) : 0.0) + (i + 1 < n ? std::abs(b(i)) : 0.0);
    lo = std::min(lo, a(i) - r);
    hi = std::max(hi, a(i) + r);
  }
  const double norm = std::max(std::abs(lo), std::abs(hi));
  const double eps = std::numeric_limits<double>::epsilon();
  const double pivmin = std::max(std::numeric_limits<double>::min(), eps * eps * norm);
  const double tiny = std::max(eps * norm, std::numeric_limits<double>::min());
  lo -= 2.0 * tiny;
  hi += 2.0 * tiny;

  out.values.resize(count);
  Matrix local(n, count);
  for (Index j = 0; j < count; ++j) {
    const double lambda = bisect(a, b, n - 1 - j, lo, hi, pivmin);
    out.values(j) = lambda;
    Vector x(n);
    for (Index i = 0; i < n; ++i) x(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i * (j + 3) + 1));
    x.normalize();
    for (int it = 0; it < 4; ++it) {
      tridiagonal_solve(a, b, lambda, tiny, x);
      for (Index k = 0; k < j; ++k) x -= local.col(k).dot(x) * local.col(k);
      const double nx = x.norm();
      if (!(nx > 0.0) || !std::isfinite(nx)) throw Error(ErrorCode::NoConvergence, "inverse iteration failed");
      x /= nx;
    }
    local.col(j) = x;
  }
  out.vectors = tri.matrixQ() * local;
  return out;
}

SubspaceFit fit_affine_subspace(const Matrix& data, const Matrix& gram, const IndexSet& rows, Index d) {
  const auto m = static_cast<Index>(rows.size());
  if (m < d + 1) throw Error(ErrorCode::RankDeficientSubset, "subset has fewer than d+1 rows");

  SubspaceFit fit;
  fit.center = Vector::Zero(data.cols());
  for (Index r : rows) fit.center += data.row(r).transpose();
  fit.center /= static_cast<double>(m);

  Matrix centered(m, data.cols());
  for (Index i = 0; i < m; ++i) centered.row(i) = data.row(rows[static_cast<std::size_t>(i)]) - fit.center.transpose();

  Matrix g(m, m);
  if (gram.size() > 0) {
    // Double-centre the subset block of the uncentred Gram matrix.
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i < m; ++i) g(i, j) = gram(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    const Vector row_means = g.rowwise().mean();
    const double total = row_means.mean();
    g.colwise() -= row_means;
    g.rowwise() -= row_means.transpose();
    g.array() += total;
  } else {
    g.triangularView<Eigen::Lower>() = centered * centered.transpose();
  }

  const EigenPairs top = top_eigenpairs(g, d);
  const double tol = std::max(1e-13 * std::max(top.values(0), 0.0), 1e-300);
  if (!(top.values(d - 1) > tol)) throw Error(ErrorCode::RankDeficientSubset, "subset spans fewer than d dimensions");

  fit.eigenvalues = top.values;
  fit.basis = centered.transpose() * top.vectors;
  for (Index k = 0; k < d; ++k) fit.basis.col(k) /= std::sqrt(top.values(k));
  // One re-orthonormalisation pass removes the loss of orthogonality that the
  // Gram route incurs for small eigenvalues.
  Eigen::HouseholderQR<Matrix> qr(fit.basis);
  const Matrix q = qr.householderQ() * Matrix::Identity(fit.basis.rows(), d);
  const Vector signs = (q.transpose() * fit.basis).diagonal().array().sign();
  fit.basis = q * signs.asDiagonal();
  return fit;
}

Vector squared_residuals(const Matrix& data, const SubspaceFit& fit) {
  const Matrix centered = data.rowwise() - fit.center.transpose();
  const Matrix scores = centered * fit.basis;
  Vector out = centered.rowwise().squaredNorm() - scores.rowwise().squaredNorm();
  // Pythagoras can leave a tiny negative from cancellation; recompute those
  // rows directly.
  for (Index i = 0; i < out.size(); ++i) {
    const double scale = centered.row(i).squaredNorm();
    if (out(i) < 1e-8 * scale) out(i) = (centered.row(i) - scores.row(i) * fit.basis.transpose()).squaredNorm();
  }
  return out;
}

void symmetric_sqrt(const Matrix& sym, double floor, Matrix& root, Matrix& inv_root) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::SingularScatter, "eigendecomposition failed");
  const Vector ev = es.eigenvalues().cwiseMax(floor);
  root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  inv_root = es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace rfps::linalg
