#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrot/datasets.hpp"
#include "lrot/divergences.hpp"

namespace lrot {

/// Ordinary least-squares slope. Needs at least 3 finite points and xs that
/// are not all equal.
double SlopeFit(const std::vector<double>& xs, const std::vector<double>& ys);

struct RateGrid {
  std::vector<Index> dims{5, 10};
  std::vector<Index> sample_sizes{100, 200, 400, 800, 1600, 3200};
  std::vector<Index> ranks{1, 5};
  int trials = 10;
  std::uint64_t seed = 0;
  MixtureRanges mixture;

  void Validate() const;
};

struct RateRow {
  Index d = 0;
  Index n = 0;
  Index r = 0;
  int trial = 0;
  double value = 0.0;
};

struct RateSlope {
  Index d = 0;
  Index r = 0;
  double slope = 0.0;
  std::vector<double> medians;  // per sample size, in grid order
};

/// DLOT between two independent n-samples of the same mixture for every
/// (d, n, r, trial) cell. The mixture depends on (seed, d) only and the draws
/// on (seed, d, n, trial), so every rank sees the same samples. Rows come
/// back in grid order whatever the execution order.
std::vector<RateRow> RatesExperiment(const RateGrid& grid, const LotOptions& opts);

/// Log-log slope of the median value against n, per (d, r).
std::vector<RateSlope> RateSlopes(const RateGrid& grid, const std::vector<RateRow>& rows);

struct GapRow {
  Index r = 0;
  double lot_value = 0.0;
  double ot_value = 0.0;
  double bound = 0.0;  // max|C| ln(min(n, m) / (r - 1))
  double cost_max = 0.0;
};

struct GapResult {
  std::vector<GapRow> rows;
  bool bound_holds = true;  // 0 <= lot - ot <= bound (with 1e-6 max|C| slack below) for every rank
};

/// n uniform points in [0,1]^2 per measure, squared Euclidean cost, best of
/// `opts.restarts` solves per rank. Ranks must be >= 2; n <= 128.
GapResult ApproxGapExperiment(Index n, const std::vector<Index>& ranks, const LotOptions& opts,
                              std::uint64_t seed);

struct InitTrace {
  InitKind init = InitKind::kRandom;
  Index rank = 0;
  std::vector<double> cost_trace;
  std::vector<double> delta_trace;
  std::vector<std::uint64_t> op_count_trace;  // includes the initializer's own cost
  std::uint64_t init_ops = 0;
  double final_cost = 0.0;
  // First iteration (1-based) at which delta < outer_tol; the run with the
  // stopping criterion is this prefix of the traces. 0 if never reached.
  int stop_iteration = 0;
};

struct InitComparisonData {
  DiscreteMeasure x;
  DiscreteMeasure y;
};

/// Stand-in for the text-embedding benchmark: two independent draws of
/// `points` samples from one 50-d ten-component mixture.
InitComparisonData MakeInitSurrogate(Index points, std::uint64_t seed, Index dim = 50);

/// Runs every initializer at every rank on the max-normalized squared
/// Euclidean cost, for cfg.max_outer_iters iterations with no early stop.
std::vector<InitTrace> InitComparisonExperiment(const InitComparisonData& data, const std::vector<Index>& ranks,
                                                const SolverConfig& cfg, double epsilon = 0.1);

}  // namespace lrot
