#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace {

oracle::Matrix RandomMatrix(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  oracle::Matrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

TEST(Oracles, AssignmentOfIdenticalSetsIsZero) {
  const auto x = RandomMatrix(6, 2, 1);
  EXPECT_DOUBLE_EQ(oracle::BruteForceAssignmentOt(oracle::PairwiseSqDist(x, x)), 0.0);
}

TEST(Oracles, AssignmentPicksIdentityOnSwapCost) {
  oracle::Matrix c(2, 2);
  c << 0, 1, 1, 0;
  EXPECT_DOUBLE_EQ(oracle::BruteForceAssignmentOt(c), 0.0);
}

TEST(Oracles, AssignmentRejectsLargeInstances) {
  EXPECT_THROW(oracle::BruteForceAssignmentOt(oracle::Matrix::Zero(9, 9)), std::length_error);
}

TEST(Oracles, MonotoneCouplingAgreesWithAssignmentInOneDimension) {
  const auto x = RandomMatrix(7, 1, 3);
  const auto y = RandomMatrix(7, 1, 4);
  const oracle::Vector w = oracle::Vector::Constant(7, 1.0 / 7.0);
  const double mono = oracle::MonotoneOt1d(x.col(0), w, y.col(0), w, [](double d) { return d * d; });
  EXPECT_NEAR(mono, oracle::BruteForceAssignmentOt(oracle::PairwiseSqDist(x, y)), 1e-12);
}

TEST(Oracles, KlProjectionOfFeasiblePointIsItself) {
  oracle::Matrix q(2, 2);
  q << 0.1, 0.2, 0.3, 0.4;
  oracle::Matrix r(2, 2);
  r << 0.25, 0.35, 0.15, 0.25;
  const oracle::Vector g = q.colwise().sum().transpose();
  const oracle::Vector a = q.rowwise().sum();
  const oracle::Vector b = r.rowwise().sum();
  const auto z = oracle::NumericalKlProjection(q, r, g, a, b, oracle::KlSet::kBoth);
  EXPECT_LT((z.q - q).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((z.r - r).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((z.g - g).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Oracles, KlProjectionScalarColumnCase) {
  // One row per side, one column: column sums 8 and 1, xi3 = 1.
  const oracle::Matrix xi1 = oracle::Matrix::Constant(1, 1, 8.0);
  const oracle::Matrix xi2 = oracle::Matrix::Constant(1, 1, 1.0);
  const oracle::Vector xi3 = oracle::Vector::Constant(1, 1.0);
  const auto z = oracle::NumericalKlProjection(xi1, xi2, xi3, oracle::Vector(), oracle::Vector(),
                                               oracle::KlSet::kColumns);
  EXPECT_NEAR(z.g[0], 2.0, 1e-12);
}

TEST(Oracles, KlProjectionIsFeasibleAndBeatsPerturbations) {
  const oracle::Matrix xi1 = RandomMatrix(3, 2, 5).array() + 0.1;
  const oracle::Matrix xi2 = RandomMatrix(2, 2, 6).array() + 0.1;
  const oracle::Vector xi3 = RandomMatrix(2, 1, 7).col(0).array() + 0.1;
  oracle::Vector a(3);
  a << 0.2, 0.3, 0.5;
  oracle::Vector b(2);
  b << 0.6, 0.4;
  const auto z = oracle::NumericalKlProjection(xi1, xi2, xi3, a, b, oracle::KlSet::kBoth);
  EXPECT_LT((z.q.rowwise().sum() - a).cwiseAbs().sum(), 1e-10);
  EXPECT_LT((z.r.rowwise().sum() - b).cwiseAbs().sum(), 1e-10);
  EXPECT_LT((z.q.colwise().sum().transpose() - z.g).cwiseAbs().sum(), 1e-10);
  EXPECT_LT((z.r.colwise().sum().transpose() - z.g).cwiseAbs().sum(), 1e-10);
  // A feasible perturbation: move mass around a 2x2 cycle of Q (keeps both
  // marginals) and the objective must not drop.
  const double best = oracle::KlObjective(z, xi1, xi2, xi3);
  for (double eps : {1e-3, -1e-3}) {
    auto w = z;
    w.q(0, 0) += eps;
    w.q(1, 1) += eps;
    w.q(0, 1) -= eps;
    w.q(1, 0) -= eps;
    EXPECT_GE(oracle::KlObjective(w, xi1, xi2, xi3), best);
  }
}

TEST(Oracles, FloydWarshallMatchesPathEnumeration) {
  oracle::Matrix w = RandomMatrix(6, 6, 8);
  w = (w + w.transpose()).eval();
  EXPECT_LT((oracle::FloydWarshall(w) - oracle::AllSimplePathsShortest(w)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Oracles, PairCountingAriIsOneForRelabeledPartition) {
  EXPECT_DOUBLE_EQ(oracle::PairCountingAri({0, 0, 1, 1, 2}, {2, 2, 0, 0, 1}), 1.0);
  EXPECT_LT(oracle::PairCountingAri({0, 0, 1, 1}, {0, 1, 0, 1}), 0.0);
}

TEST(Oracles, BruteForceKMeansSeparatesTwoPairs) {
  oracle::Matrix p(4, 1);
  p << 0.0, 1.0, 10.0, 11.0;
  EXPECT_NEAR(oracle::BruteForceKMeans(p, 2), 1.0, 1e-12);
}

TEST(Oracles, CentralDifferenceOfQuadratic) {
  oracle::Vector x(2);
  x << 1.0, -2.0;
  const auto grad = oracle::CentralDifference([](const oracle::Vector& v) { return v.squaredNorm(); }, x, 1e-5);
  EXPECT_NEAR(grad[0], 2.0, 1e-8);
  EXPECT_NEAR(grad[1], -4.0, 1e-8);
}

}  // namespace
