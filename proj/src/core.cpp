#include "lrot/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lrot {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kEmptyMeasure: return "EmptyMeasure";
    case ErrorKind::kNonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::kWeightSumMismatch: return "WeightSumMismatch";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kSizeCapExceeded: return "SizeCapExceeded";
    case ErrorKind::kNonFiniteKernel: return "NonFiniteKernel";
    case ErrorKind::kZeroRowSum: return "ZeroRowSum";
    case ErrorKind::kZeroColumnSum: return "ZeroColumnSum";
    case ErrorKind::kInnerNoConvergence: return "InnerNoConvergence";
    case ErrorKind::kInfeasibleInit: return "InfeasibleInit";
    case ErrorKind::kRankTooSmall: return "RankTooSmall";
    case ErrorKind::kAsymmetricCost: return "AsymmetricCost";
    case ErrorKind::kNonPositiveBandwidth: return "NonPositiveBandwidth";
    case ErrorKind::kDegenerateFit: return "DegenerateFit";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kUsageError: return "UsageError";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

namespace {

std::string ShapeString(Index rows, Index cols) {
  std::ostringstream out;
  out << rows << "x" << cols;
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// DiscreteMeasure

DiscreteMeasure DiscreteMeasure::Create(std::optional<Matrix> points, std::optional<Vector> weights) {
  Index n = 0;
  if (weights) {
    n = weights->size();
  } else if (points) {
    n = points->rows();
  }
  if (n == 0) throw Error(ErrorKind::kEmptyMeasure, "measure has no atoms");
  if (points && weights && points->rows() != weights->size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "points has " + std::to_string(points->rows()) + " rows but weights has " +
                    std::to_string(weights->size()) + " entries");
  }
  if (points && !points->allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "points contain non-finite coordinates");
  }

  Vector w;
  if (weights) {
    w = std::move(*weights);
    for (Index i = 0; i < n; ++i) {
      if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
        throw Error(ErrorKind::kNonPositiveWeight,
                    "weight " + std::to_string(i) + " is not strictly positive");
      }
    }
    const double total = w.sum();
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorKind::kWeightSumMismatch, "weights sum to " + std::to_string(total));
    }
    // Leaving already-normalized weights untouched keeps file round trips exact.
    if (std::abs(total - 1.0) > 1e-12) w /= total;
  } else {
    w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  }
  return DiscreteMeasure(std::move(points), std::move(w));
}

const Matrix& DiscreteMeasure::points() const {
  if (!points_) throw Error(ErrorKind::kInvalidArgument, "measure has no support points");
  return *points_;
}

bool DiscreteMeasure::operator==(const DiscreteMeasure& other) const {
  if (has_points() != other.has_points()) return false;
  if (weights_.size() != other.weights_.size() || weights_ != other.weights_) return false;
  if (!points_) return true;
  return points_->rows() == other.points_->rows() && points_->cols() == other.points_->cols() &&
         *points_ == *other.points_;
}

// ---------------------------------------------------------------------------
// CostMatrix

CostMatrix CostMatrix::FromDense(Matrix entries) {
  if (entries.size() == 0) throw Error(ErrorKind::kEmptyMeasure, "empty cost matrix");
  if (!entries.allFinite()) throw Error(ErrorKind::kInvalidArgument, "cost has non-finite entries");
  if (entries.minCoeff() < 0.0) throw Error(ErrorKind::kInvalidArgument, "cost has negative entries");
  const double max_abs = entries.cwiseAbs().maxCoeff();
  return CostMatrix(Dense{std::move(entries)}, max_abs);
}

CostMatrix CostMatrix::FromFactors(Matrix a, Matrix b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "factor inner dimensions differ: " + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.cols()));
  }
  if (a.rows() == 0 || b.rows() == 0) throw Error(ErrorKind::kEmptyMeasure, "empty cost factors");
  if (!a.allFinite() || !b.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "cost factors have non-finite entries");
  }
  // Scan implied entries block-wise for the sup norm and the sign check.
  constexpr Index kBlock = 256;
  double max_abs = 0.0;
  double min_entry = 0.0;
  for (Index start = 0; start < a.rows(); start += kBlock) {
    const Index len = std::min(kBlock, a.rows() - start);
    const Matrix block = a.middleRows(start, len) * b.transpose();
    max_abs = std::max(max_abs, block.cwiseAbs().maxCoeff());
    min_entry = std::min(min_entry, block.minCoeff());
  }
  // Cancellation in |x|^2 + |y|^2 - 2<x,y> scales with the magnitude of the
  // entries, so the tolerance does too.
  if (min_entry < -1e-12 * std::max(1.0, max_abs)) {
    throw Error(ErrorKind::kInvalidArgument,
                "factored cost implies negative entry " + std::to_string(min_entry));
  }
  return CostMatrix(Factored{std::move(a), std::move(b)}, max_abs);
}

Index CostMatrix::rows() const {
  if (const auto* d = std::get_if<Dense>(&repr_)) return d->entries.rows();
  return std::get<Factored>(repr_).a.rows();
}

Index CostMatrix::cols() const {
  if (const auto* d = std::get_if<Dense>(&repr_)) return d->entries.cols();
  return std::get<Factored>(repr_).b.rows();
}

Index CostMatrix::inner_dim() const {
  if (const auto* f = std::get_if<Factored>(&repr_)) return f->a.cols();
  return 0;
}

const Matrix& CostMatrix::dense_entries() const {
  if (const auto* d = std::get_if<Dense>(&repr_)) return d->entries;
  throw Error(ErrorKind::kInvalidArgument, "cost is factored; call Materialize()");
}

const CostMatrix::Factored& CostMatrix::factors() const {
  if (const auto* f = std::get_if<Factored>(&repr_)) return *f;
  throw Error(ErrorKind::kInvalidArgument, "cost is dense");
}

Matrix CostMatrix::Materialize() const {
  if (const auto* d = std::get_if<Dense>(&repr_)) return d->entries;
  const auto& f = std::get<Factored>(repr_);
  return (f.a * f.b.transpose()).cwiseMax(0.0);
}

CostMatrix CostMatrix::Scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorKind::kInvalidArgument, "cost scale must be positive");
  }
  if (const auto* d = std::get_if<Dense>(&repr_)) {
    return CostMatrix(Dense{d->entries * factor}, max_abs_ * factor);
  }
  const auto& f = std::get<Factored>(repr_);
  return CostMatrix(Factored{f.a * factor, f.b}, max_abs_ * factor);
}

CostMatrix CostMatrix::Transposed() const {
  if (const auto* d = std::get_if<Dense>(&repr_)) {
    return CostMatrix(Dense{d->entries.transpose()}, max_abs_);
  }
  const auto& f = std::get<Factored>(repr_);
  return CostMatrix(Factored{f.b, f.a}, max_abs_);
}

double CostMatrix::AsymmetryGap() const {
  if (rows() != cols()) return std::numeric_limits<double>::infinity();
  const Matrix c = Materialize();
  return (c - c.transpose()).cwiseAbs().maxCoeff();
}

Matrix CostApply(const CostMatrix& cost, const Matrix& m, ApplySide side, OpCounter* ops) {
  const Index n = cost.rows();
  const Index mm = cost.cols();
  Index expected = 0;
  switch (side) {
    case ApplySide::kLeft: expected = mm; break;
    case ApplySide::kRight: expected = n; break;
    case ApplySide::kTransposeLeft: expected = n; break;
  }
  const Index got = side == ApplySide::kRight ? m.cols() : m.rows();
  if (got != expected) {
    throw Error(ErrorKind::kDimensionMismatch,
                "cannot apply " + ShapeString(n, mm) + " cost to " + ShapeString(m.rows(), m.cols()));
  }
  const Index k = side == ApplySide::kRight ? m.rows() : m.cols();

  if (!cost.is_factored()) {
    Charge(ops, 2 * n * mm * k);
    const Matrix& c = cost.dense_entries();
    switch (side) {
      case ApplySide::kLeft: return c * m;
      case ApplySide::kRight: return m * c;
      case ApplySide::kTransposeLeft: return c.transpose() * m;
    }
  }
  const auto& f = cost.factors();
  Charge(ops, 2 * (n + mm) * cost.inner_dim() * k);
  switch (side) {
    case ApplySide::kLeft: return f.a * (f.b.transpose() * m);
    case ApplySide::kRight: return (m * f.a) * f.b.transpose();
    case ApplySide::kTransposeLeft: return f.b * (f.a.transpose() * m);
  }
  return {};
}

Matrix SqEuclideanDense(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "point dimensions differ: " + std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
  }
  Matrix out(x.rows(), y.rows());
  for (Index j = 0; j < y.rows(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      out(i, j) = (x.row(i) - y.row(j)).squaredNorm();
    }
  }
  return out;
}

CostMatrix SqEuclideanFactored(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "point dimensions differ: " + std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
  }
  const Index d = x.cols();
  // Distances are shift invariant; centering keeps the norms small so the
  // expansion loses less to cancellation (and is exact for coincident points).
  Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(d);
  if (x.rows() + y.rows() > 0) {
    center = (x.colwise().sum() + y.colwise().sum()) / static_cast<double>(x.rows() + y.rows());
  }
  const Matrix xc = x.rowwise() - center;
  const Matrix yc = y.rowwise() - center;
  Matrix a(x.rows(), d + 2);
  Matrix b(y.rows(), d + 2);
  a.col(0) = xc.rowwise().squaredNorm();
  a.col(1).setOnes();
  a.rightCols(d) = -2.0 * xc;
  b.col(0).setOnes();
  b.col(1) = yc.rowwise().squaredNorm();
  b.rightCols(d) = yc;
  return CostMatrix::FromFactors(std::move(a), std::move(b));
}

// ---------------------------------------------------------------------------
// LowRankCoupling

Matrix LowRankCoupling::Materialize(Index cap) const {
  if (rows() * cols() > cap) {
    throw Error(ErrorKind::kSizeCapExceeded,
                "materializing " + ShapeString(rows(), cols()) + " exceeds cap " + std::to_string(cap));
  }
  return (q * g.cwiseInverse().asDiagonal() * r.transpose()).cwiseMax(0.0);
}

double LowRankCoupling::TransportCost(const CostMatrix& cost, OpCounter* ops) const {
  const Matrix cr = CostApply(cost, r, ApplySide::kLeft, ops);
  Charge(ops, 3 * q.size());
  return (q.cwiseProduct(cr).colwise().sum().transpose().array() / g.array()).sum();
}

double MarginalResidual(const LowRankCoupling& c, const Vector& a, const Vector& b) {
  if (c.q.rows() != a.size() || c.r.rows() != b.size() || c.q.cols() != c.g.size() ||
      c.r.cols() != c.g.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "coupling shape does not match marginals");
  }
  return (c.q.rowwise().sum() - a).lpNorm<1>() + (c.r.rowwise().sum() - b).lpNorm<1>() +
         (c.q.colwise().sum().transpose() - c.g).lpNorm<1>() +
         (c.r.colwise().sum().transpose() - c.g).lpNorm<1>();
}

bool HasValidSigns(const LowRankCoupling& c) {
  return c.q.allFinite() && c.r.allFinite() && c.g.allFinite() && (c.q.array() >= 0.0).all() &&
         (c.r.array() >= 0.0).all() && (c.g.array() > 0.0).all();
}

}  // namespace lrot
