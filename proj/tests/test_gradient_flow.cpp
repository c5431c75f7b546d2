#include <gtest/gtest.h>

#include <random>

#include "lrot/datasets.hpp"
#include "lrot/gradient_flow.hpp"
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

Matrix Reshape(const Vector& v, Index rows, Index cols) { return Eigen::Map<const Matrix>(v.data(), rows, cols); }

Vector Flatten(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

// <C(X, Y), P> with P dense, entry by entry.
double DenseObjective(const Matrix& x, const Matrix& y, const Matrix& p) {
  return oracle::PairwiseSqDist(x, y).cwiseProduct(p).sum();
}

TEST(DanskinGradient, CoincidentCloudsGiveZero) {
  const Matrix x = Uniform01(6, 2, 1);
  const auto mx = DiscreteMeasure::Uniform(x);
  LotOptions opts;
  opts.solver.rank = 3;
  const SolveResult self = SolveSelfLot(SqEuclideanFactored(x, x), mx, opts);
  const Matrix grad = DanskinGradPoints(x, x, self.coupling, &self.coupling, FlowObjective::kDlot);
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DanskinGradient, SinglePairOfDiracs) {
  LowRankCoupling p;
  p.q = Matrix::Ones(1, 1);
  p.r = Matrix::Ones(1, 1);
  p.g = Vector::Ones(1);
  const Matrix x = Matrix::Constant(1, 1, 0.0);
  const Matrix y = Matrix::Constant(1, 1, 2.0);
  EXPECT_DOUBLE_EQ(DanskinGradPoints(x, y, p, nullptr, FlowObjective::kLot)(0, 0), -4.0);
}

TEST(DanskinGradient, LotMatchesFiniteDifferences) {
  const Matrix x = Uniform01(5, 2, 2);
  const Matrix y = Uniform01(4, 2, 3).array() + 0.5;
  LotOptions opts;
  opts.solver.rank = 2;
  const SolveResult res =
      SolveLot(SqEuclideanFactored(x, y), DiscreteMeasure::Uniform(x), DiscreteMeasure::Uniform(y), opts);
  const Matrix p = res.coupling.Materialize();
  const Vector fd = oracle::CentralDifference(
      [&](const Vector& v) { return DenseObjective(Reshape(v, 5, 2), y, p); }, Flatten(x), 1e-5);
  const Matrix grad = DanskinGradPoints(x, y, res.coupling, nullptr, FlowObjective::kLot);
  EXPECT_LE((Flatten(grad) - fd).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
}

TEST(DanskinGradient, DlotMatchesFiniteDifferences) {
  const Matrix x = Uniform01(5, 2, 4);
  const Matrix y = Uniform01(4, 2, 5).array() + 0.5;
  const auto mx = DiscreteMeasure::Uniform(x);
  LotOptions opts;
  opts.solver.rank = 2;
  const SolveResult xy = SolveLot(SqEuclideanFactored(x, y), mx, DiscreteMeasure::Uniform(y), opts);
  const SolveResult xx = SolveSelfLot(SqEuclideanFactored(x, x), mx, opts);
  const Matrix pxy = xy.coupling.Materialize();
  const Matrix pxx = xx.coupling.Materialize();
  const auto f = [&](const Vector& v) {
    const Matrix z = Reshape(v, 5, 2);
    return DenseObjective(z, y, pxy) - 0.5 * DenseObjective(z, z, pxx);
  };
  const Vector fd = oracle::CentralDifference(f, Flatten(x), 1e-5);
  const Matrix grad = DanskinGradPoints(x, y, xy.coupling, &xx.coupling, FlowObjective::kDlot);
  EXPECT_LE((Flatten(grad) - fd).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
}

TEST(DanskinGradient, DlotNeedsTheSelfCoupling) {
  LowRankCoupling p;
  p.q = Matrix::Ones(1, 1);
  p.r = Matrix::Ones(1, 1);
  p.g = Vector::Ones(1);
  const Matrix x = Matrix::Zero(1, 1);
  EXPECT_THROW(DanskinGradPoints(x, x, p, nullptr, FlowObjective::kDlot), Error);
}

TEST(FlowRun, TargetEqualToStartStaysPut) {
  const Matrix x = Uniform01(12, 2, 6);
  FlowConfig cfg;
  cfg.rank = 3;
  cfg.steps = 5;
  const FlowTrace trace = FlowRun(x, DiscreteMeasure::Uniform(x), cfg);
  EXPECT_LE((trace.final_points - x).cwiseAbs().maxCoeff(), 1e-12);
  for (double loss : trace.loss_trace) EXPECT_EQ(loss, 0.0);
}

TEST(FlowRun, TraceShapes) {
  const Matrix x = Uniform01(15, 2, 7);
  const auto target = DiscreteMeasure::Uniform(Uniform01(10, 2, 8).array() + 2.0);
  FlowConfig cfg;
  cfg.rank = 3;
  cfg.steps = 6;
  cfg.snapshot_every = 2;
  cfg.objective = FlowObjective::kLot;
  const FlowTrace trace = FlowRun(x, target, cfg);
  EXPECT_EQ(trace.loss_trace.size(), 7u);
  EXPECT_EQ(trace.grad_norm_trace.size(), 6u);
  EXPECT_EQ(trace.steps_done, 6);
  std::vector<int> steps;
  for (const auto& [s, pts] : trace.snapshots) steps.push_back(s);
  EXPECT_EQ(steps, (std::vector<int>{0, 2, 4, 6}));
  EXPECT_EQ(trace.snapshots.front().second, x);
  EXPECT_EQ(trace.snapshots.back().second, trace.final_points);
}

TEST(FlowRun, LotFlowMovesTowardsTheTarget) {
  const Matrix x = GaussianCloud(30, Vector::Zero(2), 0.5, 9);
  const auto target = DiscreteMeasure::Uniform(GaussianCloud(30, Vector::Constant(2, 3.0), 0.5, 10));
  FlowConfig cfg;
  cfg.rank = 5;
  cfg.steps = 20;
  cfg.objective = FlowObjective::kLot;
  const FlowTrace trace = FlowRun(x, target, cfg);
  EXPECT_LT(trace.loss_trace.back(), 0.1 * trace.loss_trace.front());
}

TEST(FlowRun, DivergingStepRaisesFlowErrorWithPartialTrace) {
  const Matrix x = Uniform01(8, 2, 11);
  const auto target = DiscreteMeasure::Uniform(Uniform01(8, 2, 12).array() + 1.0);
  FlowConfig cfg;
  cfg.rank = 2;
  cfg.steps = 50;
  cfg.learning_rate = 1e200;
  cfg.objective = FlowObjective::kLot;
  try {
    FlowRun(x, target, cfg);
    FAIL() << "expected FlowError";
  } catch (const FlowError& e) {
    EXPECT_GE(e.partial_trace().loss_trace.size(), 1u);
    EXPECT_LT(e.partial_trace().steps_done, 50);
    EXPECT_EQ(e.partial_trace().snapshots.front().second, x);
  }
}

TEST(FlowRun, RejectsBadConfig) {
  const Matrix x = Uniform01(4, 2, 13);
  const auto target = DiscreteMeasure::Uniform(x);
  FlowConfig cfg;
  cfg.rank = 2;
  cfg.steps = 0;
  EXPECT_THROW(FlowRun(x, target, cfg), Error);
  cfg.steps = 1;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(FlowRun(x, target, cfg), Error);
  cfg.learning_rate = 0.1;
  EXPECT_THROW(FlowRun(Uniform01(4, 3, 14), target, cfg), Error);
}

TEST(FlowObjective, ParsesNames) {
  EXPECT_EQ(ParseFlowObjective("dlot"), FlowObjective::kDlot);
  EXPECT_EQ(ParseFlowObjective("lot"), FlowObjective::kLot);
  EXPECT_EQ(FlowObjectiveName(FlowObjective::kLot), "lot");
  EXPECT_THROW(ParseFlowObjective("sinkhorn"), Error);
}

}  // namespace
}  // namespace lrot
