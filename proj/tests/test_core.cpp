#include <gtest/gtest.h>

#include <random>

#include "lrot/core.hpp"
#include "lrot/error.hpp"
#include "oracles.hpp"

namespace lrot {
namespace {

Matrix Uniform01(Index rows, Index cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

template <typename Fn>
ErrorKind KindOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no lrot::Error thrown";
  return ErrorKind::kNumericalFailure;
}

TEST(Measure, MissingWeightsAreUniform) {
  Matrix p(2, 1);
  p << 0, 1;
  const auto m = DiscreteMeasure::Create(p, std::nullopt);
  EXPECT_DOUBLE_EQ(m.weights()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.weights()[1], 0.5);
}

TEST(Measure, HistogramWithoutPoints) {
  Vector w(2);
  w << 0.3, 0.7;
  const auto m = DiscreteMeasure::Create(std::nullopt, w);
  EXPECT_EQ(m.size(), 2);
  EXPECT_FALSE(m.has_points());
}

TEST(Measure, RejectsZeroWeight) {
  Vector w(2);
  w << 0.0, 1.0;
  EXPECT_EQ(KindOf([&] { DiscreteMeasure::Create(std::nullopt, w); }), ErrorKind::kNonPositiveWeight);
}

TEST(Measure, RenormalizesSmallSumErrorAndRejectsLarge) {
  Vector w(2);
  w << 0.5, 0.5 + 5e-10;
  const auto m = DiscreteMeasure::Create(std::nullopt, w);
  EXPECT_NEAR(m.weights().sum(), 1.0, 1e-15);
  w << 0.5, 0.5 + 1e-6;
  EXPECT_EQ(KindOf([&] { DiscreteMeasure::Create(std::nullopt, w); }), ErrorKind::kWeightSumMismatch);
}

TEST(Measure, RejectsEmptyAndMismatch) {
  EXPECT_EQ(KindOf([] { DiscreteMeasure::Create(std::nullopt, std::nullopt); }), ErrorKind::kEmptyMeasure);
  EXPECT_EQ(KindOf([] { DiscreteMeasure::Create(Matrix::Zero(3, 1), Vector::Constant(2, 0.5)); }),
            ErrorKind::kDimensionMismatch);
}

TEST(SqEuclidean, ScalarEntries) {
  Matrix x(1, 1);
  Matrix y(1, 1);
  x << 0;
  y << 0;
  EXPECT_DOUBLE_EQ(SqEuclideanFactored(x, y).Materialize()(0, 0), 0.0);
  y << 3;
  EXPECT_DOUBLE_EQ(SqEuclideanFactored(x, y).Materialize()(0, 0), 9.0);
}

TEST(SqEuclidean, FactoredMatchesPairwiseDistances) {
  const Matrix x = Uniform01(5, 3, 1);
  const Matrix y = Uniform01(5, 3, 2);
  const CostMatrix c = SqEuclideanFactored(x, y);
  EXPECT_TRUE(c.is_factored());
  EXPECT_EQ(c.inner_dim(), 5);
  EXPECT_LE((c.Materialize() - oracle::PairwiseSqDist(x, y)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((SqEuclideanDense(x, y) - oracle::PairwiseSqDist(x, y)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SqEuclidean, DimensionMismatch) {
  EXPECT_EQ(KindOf([] { SqEuclideanFactored(Matrix::Zero(2, 2), Matrix::Zero(2, 3)); }),
            ErrorKind::kDimensionMismatch);
}

TEST(CostMatrix, DenseRejectsNegativeAndNonFinite) {
  Matrix c = Matrix::Ones(2, 2);
  c(0, 1) = -1.0;
  EXPECT_THROW(CostMatrix::FromDense(c), Error);
  c(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(CostMatrix::FromDense(c), Error);
}

TEST(CostMatrix, MaxAbsIsCached) {
  Matrix c(2, 2);
  c << 0, 3, 2, 1;
  EXPECT_DOUBLE_EQ(CostMatrix::FromDense(c).max_abs(), 3.0);
  const Matrix x = Uniform01(6, 2, 3);
  const CostMatrix f = SqEuclideanFactored(x, x);
  EXPECT_NEAR(f.max_abs(), oracle::PairwiseSqDist(x, x).maxCoeff(), 1e-12);
}

TEST(CostApply, IdentityTimesIdentity) {
  const Matrix eye = Matrix::Identity(2, 2);
  EXPECT_EQ(CostApply(CostMatrix::FromDense(eye), eye, ApplySide::kLeft), eye);
}

TEST(CostApply, FactoredAgreesWithDenseOnAllSides) {
  const Matrix a = Uniform01(8, 4, 4);
  const Matrix b = Uniform01(8, 4, 5);
  const CostMatrix f = CostMatrix::FromFactors(a, b);
  const CostMatrix d = CostMatrix::FromDense(a * b.transpose());
  const Matrix m = Uniform01(8, 3, 6);
  EXPECT_LE((CostApply(f, m, ApplySide::kLeft) - CostApply(d, m, ApplySide::kLeft)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((CostApply(f, m, ApplySide::kTransposeLeft) - CostApply(d, m, ApplySide::kTransposeLeft))
                .cwiseAbs()
                .maxCoeff(),
            1e-10);
  const Matrix mt = m.transpose();
  EXPECT_LE((CostApply(f, mt, ApplySide::kRight) - CostApply(d, mt, ApplySide::kRight)).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(CostApply, OpCountModel) {
  OpCounter ops;
  CostApply(CostMatrix::FromDense(Matrix::Ones(100, 100)), Matrix::Ones(100, 7), ApplySide::kLeft, &ops);
  EXPECT_EQ(ops.count(), 140000u);
  ops.Reset();
  CostApply(CostMatrix::FromFactors(Matrix::Ones(100, 5), Matrix::Ones(100, 5)), Matrix::Ones(100, 7),
            ApplySide::kLeft, &ops);
  EXPECT_EQ(ops.count(), 14000u);
}

TEST(CostApply, ShapeMismatch) {
  EXPECT_EQ(KindOf([] { CostApply(CostMatrix::FromDense(Matrix::Ones(3, 2)), Matrix::Ones(3, 1), ApplySide::kLeft); }),
            ErrorKind::kDimensionMismatch);
}

TEST(Coupling, RankOneIsProduct) {
  Vector a(3);
  a << 0.2, 0.3, 0.5;
  Vector b(2);
  b << 0.4, 0.6;
  const LowRankCoupling p{a, b, Vector::Ones(1)};
  EXPECT_LE((p.Materialize() - a * b.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Coupling, PointMasses) {
  const LowRankCoupling p{Matrix::Ones(1, 1), Matrix::Ones(1, 1), Vector::Ones(1)};
  EXPECT_DOUBLE_EQ(p.Materialize()(0, 0), 1.0);
}

TEST(Coupling, FeasibleTripleHasCouplingMarginals) {
  // Build Q, R from positive blocks with matching column sums g.
  const Matrix q0 = Uniform01(6, 3, 7).array() + 0.1;
  const Matrix r0 = Uniform01(5, 3, 8).array() + 0.1;
  const Vector g = Vector::Constant(3, 1.0 / 3.0);
  const Matrix q = q0 * (g.array() / q0.colwise().sum().transpose().array()).matrix().asDiagonal();
  const Matrix r = r0 * (g.array() / r0.colwise().sum().transpose().array()).matrix().asDiagonal();
  const LowRankCoupling p{q, r, g};
  const Matrix dense = p.Materialize();
  EXPECT_LE((dense.rowwise().sum() - q.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((dense.colwise().sum().transpose() - r.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(dense.sum(), 1.0, 1e-9);
  EXPECT_LE(MarginalResidual(p, q.rowwise().sum(), r.rowwise().sum()), 1e-12);
  EXPECT_TRUE(HasValidSigns(p));
}

TEST(Coupling, MaterializeCap) {
  const LowRankCoupling p{Matrix::Ones(2000, 1) / 2000.0, Matrix::Ones(1000, 1) / 1000.0, Vector::Ones(1)};
  EXPECT_EQ(KindOf([&] { p.Materialize(); }), ErrorKind::kSizeCapExceeded);
}

TEST(Coupling, FactoredAndDenseTransportCostAgree) {
  const Matrix x = Uniform01(9, 2, 9);
  const Matrix y = Uniform01(7, 2, 10);
  const Matrix q = Uniform01(9, 3, 11).array() + 0.05;
  const Matrix r = Uniform01(7, 3, 12).array() + 0.05;
  const Vector g = Uniform01(3, 1, 13).col(0).array() + 0.5;
  const LowRankCoupling p{q, r, g};
  const CostMatrix f = SqEuclideanFactored(x, y);
  const CostMatrix d = CostMatrix::FromDense(oracle::PairwiseSqDist(x, y));
  const double direct = (p.Materialize().array() * oracle::PairwiseSqDist(x, y).array()).sum();
  EXPECT_NEAR(p.TransportCost(f), direct, 1e-8 * f.max_abs());
  EXPECT_NEAR(p.TransportCost(d), direct, 1e-8 * f.max_abs());
}

}  // namespace
}  // namespace lrot
