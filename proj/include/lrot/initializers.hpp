#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "lrot/core.hpp"
#include "lrot/solver.hpp"

namespace lrot {

enum class InitKind { kRandom, kRank2, kKMeans, kGeneralizedKMeans };

struct InitStrategy {
  InitKind kind = InitKind::kKMeans;
  double epsilon = 0.1;  // entropic weight of the barycenter problem (kKMeans only)
};

/// Accepts the CLI spellings random | rank2 | kmeans | general-kmeans.
InitKind ParseInitKind(std::string_view name);
std::string_view InitKindName(InitKind kind);

/// |N(0,1)| + 0.1 draws for Q, R and g, made feasible by one inner projection.
LowRankCoupling InitRandom(const Vector& a, const Vector& b, Index rank, std::uint64_t seed,
                           const SolverConfig& cfg = {}, OpCounter* ops = nullptr);

/// Closed-form rank-2-structured factors with g = 1/r that meet all four
/// marginal constraints exactly.
LowRankCoupling InitRank2(const Vector& a, const Vector& b, Index rank, const SolverConfig& cfg = {},
                          OpCounter* ops = nullptr);

struct KMeansResult {
  Matrix centroids;  // k x d
  std::vector<int> labels;
  double objective = 0.0;  // sum_i w_i |x_i - z_{label_i}|^2
  int iterations = 0;
};

/// Weighted Lloyd iterations from k-means++ seeding. Empty clusters are
/// re-seeded at the point farthest from its centroid.
KMeansResult LloydKMeans(const Matrix& points, const Vector& weights, Index k, std::uint64_t seed,
                         int max_iters = 100, OpCounter* ops = nullptr);

/// Best objective over `restarts` seeds (seed, seed+1, ...).
KMeansResult LloydKMeansRestarts(const Matrix& points, const Vector& weights, Index k, std::uint64_t seed,
                                 int restarts, OpCounter* ops = nullptr);

/// Projects a nearly feasible triple onto the coupling constraints. If the
/// projection stalls, retries after blending with the product coupling
/// (a g^T, b g^T, g). Throws InnerNoConvergence when every attempt stalls.
LowRankCoupling RepairCoupling(LowRankCoupling c, const Vector& a, const Vector& b, const SolverConfig& cfg,
                               OpCounter* ops = nullptr);

/// Entropic barycenter initialization: r centroids from Lloyd (best of 10
/// seeds) on the larger measure (ties go to x), then iterative Bregman
/// projections on exp(-C_XZ/eps), exp(-C_YZ/eps) with rows fixed to a, b and a
/// shared column marginal. Runs in the log domain.
LowRankCoupling InitKMeansBarycenter(const DiscreteMeasure& x, const DiscreteMeasure& y, Index rank,
                                     double epsilon, std::uint64_t seed, const SolverConfig& cfg = {},
                                     OpCounter* ops = nullptr, bool* converged = nullptr);

/// Generalized k-means on each side with the column marginal fixed to 1/r.
LowRankCoupling InitGeneralizedKMeans(const CostMatrix& cxx, const Vector& a, const CostMatrix& cyy,
                                      const Vector& b, Index rank, const SolverConfig& cfg = {},
                                      OpCounter* ops = nullptr);

/// Dispatches on the strategy. Self costs for kGeneralizedKMeans default to
/// squared Euclidean costs built from the points.
LowRankCoupling Initialize(const InitStrategy& strategy, const DiscreteMeasure& x, const DiscreteMeasure& y,
                           Index rank, const SolverConfig& cfg, OpCounter* ops = nullptr,
                           const CostMatrix* cxx = nullptr, const CostMatrix* cyy = nullptr);

}  // namespace lrot
