#include "lrot/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "lrot/parallel.hpp"

namespace lrot {

double SlopeFit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::kDimensionMismatch, "xs and ys differ in length");
  if (xs.size() < 3) throw Error(ErrorKind::kInvalidArgument, "slope fit needs at least 3 points");
  const double k = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw Error(ErrorKind::kInvalidArgument, "slope fit needs finite inputs");
    }
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorKind::kDegenerateFit, "all x values are equal");
  return sxy / sxx;
}

void RateGrid::Validate() const {
  if (dims.empty() || sample_sizes.empty() || ranks.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "rate grid has an empty axis");
  }
  auto positive = [](const std::vector<Index>& v) {
    return std::all_of(v.begin(), v.end(), [](Index x) { return x > 0; });
  };
  if (!positive(dims) || !positive(sample_sizes) || !positive(ranks)) {
    throw Error(ErrorKind::kInvalidArgument, "rate grid entries must be positive");
  }
  if (trials < 3) throw Error(ErrorKind::kInvalidArgument, "rate grid needs at least 3 trials");
  if (*std::max_element(sample_sizes.begin(), sample_sizes.end()) > 5000) {
    throw Error(ErrorKind::kInvalidArgument, "sample sizes are limited to 5000");
  }
  for (Index r : ranks) {
    if (r > *std::min_element(sample_sizes.begin(), sample_sizes.end())) {
      throw Error(ErrorKind::kInvalidArgument, "rank exceeds the smallest sample size");
    }
  }
}

std::vector<RateRow> RatesExperiment(const RateGrid& grid, const LotOptions& opts) {
  grid.Validate();
  std::vector<RateRow> rows;
  for (Index d : grid.dims) {
    for (Index n : grid.sample_sizes) {
      for (Index r : grid.ranks) {
        for (int t = 0; t < grid.trials; ++t) rows.push_back(RateRow{d, n, r, t, 0.0});
      }
    }
  }
  std::map<Index, GaussianMixture> mixtures;
  for (Index d : grid.dims) {
    mixtures.emplace(d, MakeGaussianMixture(d, DeriveSeed(grid.seed, static_cast<std::uint64_t>(d)), 10,
                                            grid.mixture));
  }

  ParallelFor(rows.size(), [&](std::size_t idx) {
    RateRow& row = rows[idx];
    const std::uint64_t cell = DeriveSeed(
        DeriveSeed(DeriveSeed(grid.seed, static_cast<std::uint64_t>(row.d)), static_cast<std::uint64_t>(row.n)),
        static_cast<std::uint64_t>(row.trial) + 1000);
    const GaussianMixture& mix = mixtures.at(row.d);
    const DiscreteMeasure x = DiscreteMeasure::Uniform(SampleMixture(mix, row.n, DeriveSeed(cell, 0)));
    const DiscreteMeasure y = DiscreteMeasure::Uniform(SampleMixture(mix, row.n, DeriveSeed(cell, 1)));
    LotOptions o = opts;
    o.solver.rank = row.r;
    o.solver.seed = DeriveSeed(cell, 2);
    row.value = DlotSqEuclidean(x, y, o).value;
  });
  return rows;
}

std::vector<RateSlope> RateSlopes(const RateGrid& grid, const std::vector<RateRow>& rows) {
  std::vector<RateSlope> out;
  for (Index d : grid.dims) {
    for (Index r : grid.ranks) {
      RateSlope s;
      s.d = d;
      s.r = r;
      std::vector<double> xs;
      std::vector<double> ys;
      for (Index n : grid.sample_sizes) {
        std::vector<double> vals;
        for (const auto& row : rows) {
          if (row.d == d && row.r == r && row.n == n) vals.push_back(row.value);
        }
        if (vals.empty()) throw Error(ErrorKind::kInvalidArgument, "rate table is missing a cell");
        std::sort(vals.begin(), vals.end());
        const std::size_t mid = vals.size() / 2;
        const double median = vals.size() % 2 == 1 ? vals[mid] : 0.5 * (vals[mid - 1] + vals[mid]);
        s.medians.push_back(median);
        xs.push_back(std::log(static_cast<double>(n)));
        // A nonpositive median has no logarithm; the fit then fails loudly.
        ys.push_back(median > 0.0 ? std::log(median) : std::numeric_limits<double>::quiet_NaN());
      }
      s.slope = SlopeFit(xs, ys);
      out.push_back(std::move(s));
    }
  }
  return out;
}

GapResult ApproxGapExperiment(Index n, const std::vector<Index>& ranks, const LotOptions& opts,
                              std::uint64_t seed) {
  if (n < 2 || n > 128) throw Error(ErrorKind::kInvalidArgument, "gap experiment needs 2 <= n <= 128");
  for (Index r : ranks) {
    if (r < 2 || r > n) throw Error(ErrorKind::kInvalidArgument, "ranks must lie in [2, n]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix px(n, 2);
  Matrix py(n, 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 2; ++j) px(i, j) = unif(rng);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 2; ++j) py(i, j) = unif(rng);
  }
  const DiscreteMeasure x = DiscreteMeasure::Uniform(px);
  const DiscreteMeasure y = DiscreteMeasure::Uniform(py);
  const CostMatrix cost = SqEuclideanFactored(px, py);
  const double ot = ExactOt(cost, x.weights(), y.weights()).value;

  GapResult out;
  out.rows.resize(ranks.size());
  ParallelFor(ranks.size(), [&](std::size_t i) {
    LotOptions o = opts;
    o.solver.rank = ranks[i];
    GapRow& row = out.rows[i];
    row.r = ranks[i];
    row.lot_value = SolveLot(cost, x, y, o).value;
    row.ot_value = ot;
    row.cost_max = cost.max_abs();
    row.bound = cost.max_abs() * std::log(static_cast<double>(n) / static_cast<double>(ranks[i] - 1));
  });
  for (const auto& row : out.rows) {
    const double gap = row.lot_value - row.ot_value;
    if (gap < -1e-6 * row.cost_max || gap > row.bound) out.bound_holds = false;
  }
  return out;
}

InitComparisonData MakeInitSurrogate(Index points, std::uint64_t seed, Index dim) {
  const GaussianMixture mix = MakeGaussianMixture(dim, DeriveSeed(seed, 0));
  return InitComparisonData{DiscreteMeasure::Uniform(SampleMixture(mix, points, DeriveSeed(seed, 1))),
                            DiscreteMeasure::Uniform(SampleMixture(mix, points, DeriveSeed(seed, 2)))};
}

std::vector<InitTrace> InitComparisonExperiment(const InitComparisonData& data, const std::vector<Index>& ranks,
                                                const SolverConfig& cfg, double epsilon) {
  const Matrix& px = data.x.points();
  const Matrix& py = data.y.points();
  const Vector& a = data.x.weights();
  const Vector& b = data.y.weights();
  const CostMatrix raw = SqEuclideanFactored(px, py);
  const double scale = raw.max_abs() > 0.0 ? raw.max_abs() : 1.0;
  const CostMatrix cost = raw.Scaled(1.0 / scale);
  const CostMatrix raw_xx = SqEuclideanFactored(px, px);
  const CostMatrix raw_yy = SqEuclideanFactored(py, py);
  const CostMatrix cxx = raw_xx.max_abs() > 0.0 ? raw_xx.Scaled(1.0 / raw_xx.max_abs()) : raw_xx;
  const CostMatrix cyy = raw_yy.max_abs() > 0.0 ? raw_yy.Scaled(1.0 / raw_yy.max_abs()) : raw_yy;

  const std::vector<InitKind> kinds{InitKind::kRandom, InitKind::kRank2, InitKind::kKMeans,
                                    InitKind::kGeneralizedKMeans};
  std::vector<InitTrace> out(ranks.size() * kinds.size());
  ParallelFor(out.size(), [&](std::size_t idx) {
    InitTrace& trace = out[idx];
    trace.rank = ranks[idx / kinds.size()];
    trace.init = kinds[idx % kinds.size()];
    SolverConfig c = cfg;
    c.rank = trace.rank;
    c.use_stopping_criterion = false;
    OpCounter ops;
    LowRankCoupling init;
    switch (trace.init) {
      case InitKind::kRandom: init = InitRandom(a, b, c.rank, c.seed, c, &ops); break;
      case InitKind::kRank2: init = InitRank2(a, b, c.rank, c, &ops); break;
      case InitKind::kKMeans: init = InitKMeansBarycenter(data.x, data.y, c.rank, epsilon * scale, c.seed, c, &ops); break;
      case InitKind::kGeneralizedKMeans: init = InitGeneralizedKMeans(cxx, a, cyy, b, c.rank, c, &ops); break;
    }
    trace.init_ops = ops.count();
    SolveResult res = LotSolve(cost, a, b, c, init, &ops);
    trace.cost_trace = std::move(res.report.cost_trace);
    trace.delta_trace = std::move(res.report.delta_trace);
    trace.op_count_trace = std::move(res.report.op_count_trace);
    trace.final_cost = res.value;
    for (std::size_t k = 0; k < trace.delta_trace.size(); ++k) {
      if (std::isfinite(trace.delta_trace[k]) && trace.delta_trace[k] < cfg.outer_tol) {
        trace.stop_iteration = static_cast<int>(k) + 1;
        break;
      }
    }
  });
  return out;
}

}  // namespace lrot
