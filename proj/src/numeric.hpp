#pragma once

// Internal helpers shared by the initializers and the clustering module.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "lrot/core.hpp"

namespace lrot::detail {

inline Vector RowLogSumExp(const Matrix& m) {
  Vector out(m.rows());
  const Vector mx = m.rowwise().maxCoeff();
  for (Index i = 0; i < m.rows(); ++i) {
    if (!std::isfinite(mx[i])) {
      out[i] = mx[i];
      continue;
    }
    out[i] = mx[i] + std::log((m.row(i).array() - mx[i]).exp().sum());
  }
  return out;
}

inline Vector ColLogSumExp(const Matrix& m) {
  Vector out(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    const double mx = m.col(j).maxCoeff();
    if (!std::isfinite(mx)) {
      out[j] = mx;
      continue;
    }
    out[j] = mx + std::log((m.col(j).array() - mx).exp().sum());
  }
  return out;
}

// |N(0,1)| + 0.1 entries.
inline Matrix PositiveGaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) out(i, j) = std::abs(normal(rng)) + 0.1;
  }
  return out;
}

}  // namespace lrot::detail
