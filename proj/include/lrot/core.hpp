#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "lrot/error.hpp"

namespace lrot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Machine-independent "time": counts algebraic operations under a fixed cost
// model. A matrix product of shapes (p x s)(s x t) charges 2*p*s*t; an
// elementwise exp/log/divide/multiply charges 1 per entry; a reduction charges
// 1 per summed entry.
class OpCounter {
 public:
  void Add(std::uint64_t ops) noexcept { count_ += ops; }
  void Add(Index ops) noexcept { count_ += static_cast<std::uint64_t>(ops); }
  std::uint64_t count() const noexcept { return count_; }
  void Reset() noexcept { count_ = 0; }

 private:
  std::uint64_t count_ = 0;
};

inline void Charge(OpCounter* ops, Index amount) {
  if (ops != nullptr) ops->Add(amount);
}

/// Weighted point cloud (or a bare histogram over an abstract index set).
/// Weights are strictly positive and sum to one.
class DiscreteMeasure {
 public:
  /// Builds a measure. Missing weights default to uniform; weights whose sum is
  /// off by at most 1e-9 are renormalized, larger deviations are rejected.
  /// Points are stored one per row.
  static DiscreteMeasure Create(std::optional<Matrix> points, std::optional<Vector> weights);

  static DiscreteMeasure Uniform(Matrix points) { return Create(std::move(points), std::nullopt); }

  Index size() const { return weights_.size(); }
  bool has_points() const { return points_.has_value(); }
  Index dim() const { return points_ ? points_->cols() : 0; }
  const Matrix& points() const;
  const Vector& weights() const { return weights_; }

  bool operator==(const DiscreteMeasure& other) const;

 private:
  DiscreteMeasure(std::optional<Matrix> points, Vector weights)
      : points_(std::move(points)), weights_(std::move(weights)) {}

  std::optional<Matrix> points_;
  Vector weights_;
};

/// Ground cost, either stored densely or as C = A * B^T with inner dimension q.
class CostMatrix {
 public:
  struct Dense {
    Matrix entries;
  };
  struct Factored {
    Matrix a;  // n x q
    Matrix b;  // m x q
  };

  static CostMatrix FromDense(Matrix entries);
  static CostMatrix FromFactors(Matrix a, Matrix b);

  bool is_factored() const { return std::holds_alternative<Factored>(repr_); }
  Index rows() const;
  Index cols() const;
  /// Inner dimension q of the factorization (0 for dense costs).
  Index inner_dim() const;
  double max_abs() const { return max_abs_; }

  const Matrix& dense_entries() const;
  const Factored& factors() const;

  /// Dense n x m copy; factored entries are clamped at zero.
  Matrix Materialize() const;
  CostMatrix Scaled(double factor) const;
  CostMatrix Transposed() const;
  /// Returns max |C - C^T| for square costs (materializes factored costs).
  double AsymmetryGap() const;

 private:
  explicit CostMatrix(std::variant<Dense, Factored> repr, double max_abs)
      : repr_(std::move(repr)), max_abs_(max_abs) {}

  std::variant<Dense, Factored> repr_;
  double max_abs_ = 0.0;
};

enum class ApplySide {
  kLeft,           // C * M,   M is m x k
  kRight,          // M * C,   M is k x n
  kTransposeLeft,  // C^T * M, M is n x k
};

/// Multiplies the cost with M without ever materializing a factored cost.
/// Charges 2nmk operations for dense costs and 2(n+m)qk for factored ones.
Matrix CostApply(const CostMatrix& cost, const Matrix& m, ApplySide side, OpCounter* ops = nullptr);

/// Pairwise squared distances between the rows of x and y.
Matrix SqEuclideanDense(const Matrix& x, const Matrix& y);

/// Exact rank-(d+2) factorization of the squared Euclidean cost:
/// row_i(A) = [|x_i|^2, 1, -2 x_i], row_j(B) = [1, |y_j|^2, y_j].
CostMatrix SqEuclideanFactored(const Matrix& x, const Matrix& y);

/// The factor triple (Q, R, g) standing for P = Q diag(1/g) R^T.
struct LowRankCoupling {
  Matrix q;  // n x r
  Matrix r;  // m x r
  Vector g;  // r

  Index rank() const { return g.size(); }
  Index rows() const { return q.rows(); }
  Index cols() const { return r.rows(); }

  static constexpr Index kDefaultMaterializeCap = 1'000'000;

  /// Dense P; refuses when n*m exceeds the cap. Intended for tests and small
  /// oracle instances only.
  Matrix Materialize(Index cap = kDefaultMaterializeCap) const;

  /// <C, Q diag(1/g) R^T> via the trace identity, without forming P.
  double TransportCost(const CostMatrix& cost, OpCounter* ops = nullptr) const;
};

/// L1 residual of the four marginal equalities
/// |Q1 - a| + |R1 - b| + |Q^T 1 - g| + |R^T 1 - g|.
double MarginalResidual(const LowRankCoupling& coupling, const Vector& a, const Vector& b);

/// True when all entries are finite, Q and R are nonnegative and g is positive.
bool HasValidSigns(const LowRankCoupling& coupling);

}  // namespace lrot
