#pragma once

#include <array>
#include <cstdint>

#include "lrot/clustering.hpp"
#include "lrot/core.hpp"
#include "lrot/initializers.hpp"
#include "lrot/solver.hpp"

namespace lrot {

struct ExactOtResult {
  double value = 0.0;
  Matrix plan;  // n x m optimal coupling
};

/// Exact linear-program optimum by successive shortest paths with Dijkstra
/// and node potentials on the complete bipartite graph. Limited to
/// n, m <= 256.
ExactOtResult ExactOt(const CostMatrix& cost, const Vector& a, const Vector& b);

struct LotOptions {
  SolverConfig solver;
  InitStrategy init;
  int restarts = 1;  // best value over seeds solver.seed, solver.seed + 1, ...
  // Solve on C / max|C| and scale the value back. Makes the adaptive step
  // behave identically for any cost unit.
  bool normalize_cost = true;
};

/// LOT between two measures with the general solver. At rank 1 the coupling
/// is a b^T and no iterations run. `warm_start`, when given, replaces the
/// initializer for the first restart.
SolveResult SolveLot(const CostMatrix& cost, const DiscreteMeasure& x, const DiscreteMeasure& y,
                     const LotOptions& opts, OpCounter* ops = nullptr,
                     const LowRankCoupling* warm_start = nullptr);

/// LOT(mu, mu) with the symmetric solver; the coupling has R = Q.
SolveResult SolveSelfLot(const CostMatrix& cost, const DiscreteMeasure& x, const LotOptions& opts,
                         OpCounter* ops = nullptr, const LowRankCoupling* warm_start = nullptr);

struct DivergenceValue {
  double value = 0.0;  // lot_xy - (lot_xx + lot_yy) / 2
  double lot_xy = 0.0;
  double lot_xx = 0.0;
  double lot_yy = 0.0;
  std::array<SolveReport, 3> reports;  // xy, xx, yy
  std::array<LowRankCoupling, 3> couplings;
};

/// Debiased LOT. The cross term uses seed, the self terms seed+1 and seed+2.
/// When both measures and all three costs coincide, the self term is solved
/// once and reused for all three parts, so the value is exactly zero.
DivergenceValue Dlot(const DiscreteMeasure& x, const DiscreteMeasure& y, const CostMatrix& cxy,
                     const CostMatrix& cxx, const CostMatrix& cyy, const LotOptions& opts,
                     OpCounter* ops = nullptr);

/// Dlot with squared Euclidean costs built from the points (factored).
DivergenceValue DlotSqEuclidean(const DiscreteMeasure& x, const DiscreteMeasure& y, const LotOptions& opts,
                                OpCounter* ops = nullptr);

/// (2 a^T Cxy b - a^T Cxx a - b^T Cyy b) / 2.
double MmdNegCost(const DiscreteMeasure& x, const DiscreteMeasure& y, const CostMatrix& cxy,
                  const CostMatrix& cxx, const CostMatrix& cyy);

/// Representation-level equality (same variant, bitwise-equal entries).
bool SameCost(const CostMatrix& lhs, const CostMatrix& rhs);

}  // namespace lrot
