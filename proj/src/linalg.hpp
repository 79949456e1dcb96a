#pragma once

#include "rfps/types.hpp"

namespace rfps::linalg {

struct EigenPairs {
  Vector values;   // descending
  Matrix vectors;  // columns match values
};

// Largest `count` eigenpairs of a symmetric matrix (only the lower triangle is
// read). Large matrices: tridiagonalisation, bisection and inverse iteration,
// so only the wanted part of the spectrum is resolved.
EigenPairs top_eigenpairs(const Matrix& sym, Index count);

// Affine rank-d least-squares fit of a set of rows: the row mean and the
// leading d right singular vectors of the centred rows.
struct SubspaceFit {
  Vector center;       // cols
  Matrix basis;        // cols x d, orthonormal
  Vector eigenvalues;  // squared singular values, descending
};

// `gram` is optional: when non-empty it must equal data * data^T and is used
// to form the subset Gram matrix without touching the wide data.
SubspaceFit fit_affine_subspace(const Matrix& data, const Matrix& gram, const IndexSet& rows, Index d);

// Squared distance of every row of `data` to the affine subspace.
Vector squared_residuals(const Matrix& data, const SubspaceFit& fit);

// Symmetric square root and inverse square root of a PSD matrix with
// eigenvalues clipped from below at `floor`.
void symmetric_sqrt(const Matrix& sym, double floor, Matrix& root, Matrix& inv_root);

}  // namespace rfps::linalg
