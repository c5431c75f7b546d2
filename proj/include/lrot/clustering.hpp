#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lrot/core.hpp"
#include "lrot/initializers.hpp"
#include "lrot/solver.hpp"

namespace lrot {

struct ClusterOptions {
  SolverConfig solver;  // solver.rank is ignored, the cluster count is passed explicitly
  int restarts = 5;
  std::optional<Vector> fixed_g;  // when set, columns are projected to this marginal
  std::optional<Matrix> init_q;   // replaces the random start of the first restart
};

struct ClusterResult {
  Matrix q;                 // n x k assignment mass
  std::vector<int> labels;  // row argmax, ties to the smallest index
  double objective = 0.0;   // <C, Q diag(1/Q^T 1) Q^T>
  Vector g;
  SolveReport report;
  std::uint64_t seed = 0;  // seed of the winning restart
};

struct SymmetricSolveResult {
  Matrix q;
  Vector g;
  SolveReport report;
  double value = 0.0;
};

/// Mirror descent on min <C, Q diag(1/g) Q^T> over Q1 = a, Q^T 1 = g. This is
/// the general factor iteration restricted to R = Q, so one step costs one
/// cost application instead of two.
SymmetricSolveResult SymmetricLotSolve(const CostMatrix& cost, const Vector& a, const SolverConfig& cfg,
                                       const Matrix& init_q, const std::optional<Vector>& fixed_g,
                                       OpCounter* ops = nullptr);

/// Generalized k-means: best of `restarts` symmetric solves.
ClusterResult LotCluster(const CostMatrix& cost, const Vector& a, Index k, const ClusterOptions& opts,
                         OpCounter* ops = nullptr);

/// Random positive start projected to rows a (and to columns fixed_g if given).
Matrix RandomSymmetricInit(const Vector& a, Index k, std::uint64_t seed, const SolverConfig& cfg,
                           const std::optional<Vector>& fixed_g = std::nullopt);

/// Soft assignment of points to Lloyd centroids (best of 10 seeds), rows
/// normalized to a.
Matrix KMeansSymmetricInit(const Matrix& points, const Vector& a, Index k, double epsilon,
                           std::uint64_t seed, OpCounter* ops = nullptr);

std::vector<int> HardLabels(const Matrix& q);
double ClusterObjective(const CostMatrix& cost, const Matrix& q, OpCounter* ops = nullptr);
double AdjustedRandIndex(std::span<const int> labels_a, std::span<const int> labels_b);

struct KMeansEquivalence {
  double lot_objective = 0.0;    // n * <C, Q diag(1/Q^T 1) Q^T> with a = 1/n
  double lloyd_objective = 0.0;  // unit-mass k-means objective, best of 10 restarts
  ClusterResult cluster;
  KMeansResult lloyd;
};

KMeansEquivalence KMeansEquivalenceCheck(const Matrix& points, Index k, std::uint64_t seed,
                                         const ClusterOptions& opts = {});

/// All-pairs shortest paths on the complete graph with edge weights
/// 1 - exp(-|x_i - x_j|^2 / (2 sigma^2)). An empty bandwidth selects the median
/// pairwise distance.
CostMatrix ShortestPathCost(const Matrix& points, std::optional<double> bandwidth,
                            double* bandwidth_used = nullptr);

}  // namespace lrot
