#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace rfps {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Row or column index set, kept sorted ascending.
using IndexSet = std::vector<Index>;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Vector to_vector(std::span<const double> xs) {
  return Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
}

IndexSet all_indices(Index n);

Matrix select_rows(const Matrix& m, const IndexSet& rows);
Vector select_rows(const Vector& v, const IndexSet& rows);

}  // namespace rfps
