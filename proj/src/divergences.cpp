#include "lrot/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>

#include "lrot/parallel.hpp"

namespace lrot {

ExactOtResult ExactOt(const CostMatrix& cost, const Vector& a, const Vector& b) {
  const Index n = a.size();
  const Index m = b.size();
  if (n > 256 || m > 256) throw Error(ErrorKind::kSizeCapExceeded, "exact OT is limited to n, m <= 256");
  if (n == 0 || m == 0) throw Error(ErrorKind::kEmptyMeasure, "empty marginal");
  if (cost.rows() != n || cost.cols() != m) {
    throw Error(ErrorKind::kDimensionMismatch, "cost shape does not match marginals");
  }
  const Matrix c = cost.Materialize();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr double kZero = 1e-15;

  Matrix flow = Matrix::Zero(n, m);
  Vector supply = a;
  Vector demand = b;
  // Nodes 0..n-1 are sources, n..n+m-1 sinks.
  const Index nodes = n + m;
  Vector pot = Vector::Zero(nodes);
  Vector dist(nodes);
  std::vector<Index> pred(nodes);
  std::vector<char> done(nodes);

  for (;;) {
    bool has_supply = false;
    for (Index i = 0; i < n; ++i) has_supply |= supply[i] > kZero;
    bool has_demand = false;
    for (Index j = 0; j < m; ++j) has_demand |= demand[j] > kZero;
    if (!has_supply || !has_demand) break;

    dist.setConstant(kInf);
    std::fill(pred.begin(), pred.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (Index i = 0; i < n; ++i) {
      if (supply[i] > kZero) dist[i] = 0.0;
    }
    Index target = -1;
    for (;;) {
      Index u = -1;
      for (Index v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[u])) u = v;
      }
      if (u < 0) break;
      done[u] = 1;
      if (u >= n && demand[u - n] > kZero) {
        target = u;
        break;
      }
      if (u < n) {
        for (Index j = 0; j < m; ++j) {
          const Index v = n + j;
          if (done[v]) continue;
          const double nd = dist[u] + std::max(0.0, c(u, j) + pot[u] - pot[v]);
          if (nd < dist[v]) {
            dist[v] = nd;
            pred[v] = u;
          }
        }
      } else {
        const Index j = u - n;
        for (Index i = 0; i < n; ++i) {
          if (done[i] || !(flow(i, j) > 0.0)) continue;
          const double nd = dist[u] + std::max(0.0, -c(i, j) + pot[u] - pot[i]);
          if (nd < dist[i]) {
            dist[i] = nd;
            pred[i] = u;
          }
        }
      }
    }
    if (target < 0) throw Error(ErrorKind::kNumericalFailure, "exact OT found no augmenting path");

    const double reach = dist[target];
    for (Index v = 0; v < nodes; ++v) pot[v] += std::min(dist[v], reach);

    double push = demand[target - n];
    Index v = target;
    while (pred[v] >= 0) {
      const Index u = pred[v];
      if (u >= n) push = std::min(push, flow(v, u - n));  // reverse edge sink u -> source v
      v = u;
    }
    push = std::min(push, supply[v]);

    supply[v] -= push;
    demand[target - n] -= push;
    v = target;
    while (pred[v] >= 0) {
      const Index u = pred[v];
      if (u < n) {
        flow(u, v - n) += push;
      } else {
        flow(v, u - n) -= push;
      }
      v = u;
    }
  }

  ExactOtResult out;
  out.value = flow.cwiseProduct(c).sum();
  out.plan = std::move(flow);
  return out;
}

bool SameCost(const CostMatrix& lhs, const CostMatrix& rhs) {
  if (lhs.is_factored() != rhs.is_factored()) return false;
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) return false;
  if (lhs.is_factored()) {
    const auto& l = lhs.factors();
    const auto& r = rhs.factors();
    return l.a.cols() == r.a.cols() && l.a == r.a && l.b == r.b;
  }
  return lhs.dense_entries() == rhs.dense_entries();
}

namespace {

double CostScale(const CostMatrix& cost, const LotOptions& opts) {
  return opts.normalize_cost && cost.max_abs() > 0.0 ? cost.max_abs() : 1.0;
}

double Bilinear(const CostMatrix& cost, const Vector& a, const Vector& b, OpCounter* ops) {
  const Matrix cb = CostApply(cost, b, ApplySide::kLeft, ops);
  Charge(ops, 2 * a.size());
  return a.dot(cb.col(0));
}

void RescaleReport(SolveReport& report, double scale) {
  for (double& v : report.cost_trace) v *= scale;
}

LowRankCoupling RepairWarm(const LowRankCoupling& warm, const Vector& a, const Vector& b, const SolverConfig& cfg,
                           OpCounter* ops) {
  if (warm.q.rows() != a.size() || warm.r.rows() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "warm start does not match the measures");
  }
  if (HasValidSigns(warm) && MarginalResidual(warm, a, b) <= cfg.inner_tol) return warm;
  return RepairCoupling(LowRankCoupling{warm.q.cwiseMax(cfg.kernel_floor), warm.r.cwiseMax(cfg.kernel_floor),
                                        warm.g.cwiseMax(cfg.g_floor)},
                        a, b, cfg, ops);
}

template <typename Fn>
SolveResult BestOfRestarts(int restarts, OpCounter* ops, Fn&& solve_one) {
  const std::size_t count = static_cast<std::size_t>(std::max(1, restarts));
  std::vector<std::optional<SolveResult>> results(count);
  std::vector<std::exception_ptr> failures(count);
  std::vector<std::uint64_t> counts(count, 0);
  ParallelFor(count, [&](std::size_t t) {
    OpCounter local;
    try {
      results[t] = solve_one(t, &local);
    } catch (...) {
      failures[t] = std::current_exception();
    }
    counts[t] = local.count();
  });
  if (ops != nullptr) {
    for (auto c : counts) ops->Add(c);
  }
  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < count; ++t) {
    if (results[t] && (!best || results[t]->value < results[*best]->value)) best = t;
  }
  if (!best) std::rethrow_exception(failures[0]);
  return std::move(*results[*best]);
}

}  // namespace

SolveResult SolveLot(const CostMatrix& cost, const DiscreteMeasure& x, const DiscreteMeasure& y,
                     const LotOptions& opts, OpCounter* ops, const LowRankCoupling* warm_start) {
  const Vector& a = x.weights();
  const Vector& b = y.weights();
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "cost shape does not match the measures");
  }
  const Index rank = opts.solver.rank;
  if (rank < 1 || rank > std::min(a.size(), b.size())) {
    throw Error(ErrorKind::kInvalidArgument, "rank must lie in [1, min(n, m)]");
  }
  if (rank == 1) {
    SolveResult res;
    res.coupling = LowRankCoupling{a, b, Vector::Ones(1)};
    res.value = Bilinear(cost, a, b, ops);
    res.report.converged = true;
    return res;
  }

  const double scale = CostScale(cost, opts);
  const CostMatrix work = scale != 1.0 ? cost.Scaled(1.0 / scale) : cost;
  std::optional<CostMatrix> self_x;
  std::optional<CostMatrix> self_y;
  if (opts.init.kind == InitKind::kGeneralizedKMeans) {
    if (!x.has_points() || !y.has_points()) {
      throw Error(ErrorKind::kInvalidArgument, "general-kmeans initialization needs points or self costs");
    }
    const CostMatrix cx = SqEuclideanFactored(x.points(), x.points());
    const CostMatrix cy = SqEuclideanFactored(y.points(), y.points());
    self_x = cx.max_abs() > 0.0 ? cx.Scaled(1.0 / cx.max_abs()) : cx;
    self_y = cy.max_abs() > 0.0 ? cy.Scaled(1.0 / cy.max_abs()) : cy;
  }

  SolveResult res = BestOfRestarts(opts.restarts, ops, [&](std::size_t t, OpCounter* local) {
    SolverConfig cfg = opts.solver;
    cfg.seed = opts.solver.seed + t;
    LowRankCoupling init;
    if (t == 0 && warm_start != nullptr) {
      init = RepairWarm(*warm_start, a, b, cfg, local);
    } else if (opts.init.kind == InitKind::kKMeans) {
      init = InitKMeansBarycenter(x, y, rank, opts.init.epsilon * scale, cfg.seed, cfg, local);
    } else {
      init = Initialize(opts.init, x, y, rank, cfg, local, self_x ? &*self_x : nullptr,
                        self_y ? &*self_y : nullptr);
    }
    return LotSolve(work, a, b, cfg, init, local);
  });
  res.value *= scale;
  RescaleReport(res.report, scale);
  return res;
}

SolveResult SolveSelfLot(const CostMatrix& cost, const DiscreteMeasure& x, const LotOptions& opts,
                         OpCounter* ops, const LowRankCoupling* warm_start) {
  const Vector& a = x.weights();
  const Index n = a.size();
  if (cost.rows() != n || cost.cols() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "self cost shape does not match the measure");
  }
  const Index rank = opts.solver.rank;
  if (rank < 1 || rank > n) throw Error(ErrorKind::kInvalidArgument, "rank must lie in [1, n]");
  if (!cost.is_factored() && cost.AsymmetryGap() > 1e-9 * std::max(1.0, cost.max_abs())) {
    throw Error(ErrorKind::kAsymmetricCost, "self cost is not symmetric");
  }
  if (rank == 1) {
    SolveResult res;
    res.coupling = LowRankCoupling{a, a, Vector::Ones(1)};
    res.value = Bilinear(cost, a, a, ops);
    res.report.converged = true;
    return res;
  }

  const double scale = CostScale(cost, opts);
  const CostMatrix work = scale != 1.0 ? cost.Scaled(1.0 / scale) : cost;

  SolveResult res = BestOfRestarts(opts.restarts, ops, [&](std::size_t t, OpCounter* local) {
    SolverConfig cfg = opts.solver;
    cfg.seed = opts.solver.seed + t;
    Matrix init_q;
    if (t == 0 && warm_start != nullptr) {
      init_q = RepairWarm(LowRankCoupling{warm_start->q, warm_start->q, warm_start->g}, a, a, cfg, local).q;
    } else {
      switch (opts.init.kind) {
        case InitKind::kRandom: init_q = RandomSymmetricInit(a, rank, cfg.seed, cfg); break;
        case InitKind::kRank2: init_q = InitRank2(a, a, rank, cfg, local).q; break;
        case InitKind::kKMeans:
          if (!x.has_points()) {
            throw Error(ErrorKind::kInvalidArgument, "kmeans initialization needs Euclidean support points");
          }
          init_q = KMeansSymmetricInit(x.points(), a, rank, opts.init.epsilon * scale, cfg.seed, local);
          break;
        case InitKind::kGeneralizedKMeans: {
          ClusterOptions copts;
          copts.solver = cfg;
          copts.restarts = 1;
          copts.fixed_g = Vector::Constant(rank, 1.0 / static_cast<double>(rank));
          init_q = LotCluster(work, a, rank, copts, local).q;
          break;
        }
      }
    }
    SymmetricSolveResult sym = SymmetricLotSolve(work, a, cfg, init_q, std::nullopt, local);
    SolveResult out;
    out.coupling = LowRankCoupling{sym.q, sym.q, sym.g};
    out.report = std::move(sym.report);
    out.value = sym.value;
    return out;
  });
  res.value *= scale;
  RescaleReport(res.report, scale);
  return res;
}

DivergenceValue Dlot(const DiscreteMeasure& x, const DiscreteMeasure& y, const CostMatrix& cxy,
                     const CostMatrix& cxx, const CostMatrix& cyy, const LotOptions& opts, OpCounter* ops) {
  if (cxy.rows() != x.size() || cxy.cols() != y.size() || cxx.rows() != x.size() || cxx.cols() != x.size() ||
      cyy.rows() != y.size() || cyy.cols() != y.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "costs do not match the measures");
  }
  DivergenceValue out;
  if (x == y && SameCost(cxy, cxx) && SameCost(cxx, cyy)) {
    LotOptions self = opts;
    self.solver.seed = opts.solver.seed + 1;
    SolveResult res = SolveSelfLot(cxx, x, self, ops);
    out.lot_xy = out.lot_xx = out.lot_yy = res.value;
    out.reports = {res.report, res.report, res.report};
    out.couplings = {res.coupling, res.coupling, res.coupling};
    out.value = out.lot_xy - 0.5 * (out.lot_xx + out.lot_yy);
    return out;
  }

  std::array<std::optional<SolveResult>, 3> parts;
  std::array<std::exception_ptr, 3> failures;
  std::array<std::uint64_t, 3> counts{0, 0, 0};
  ParallelFor(3, [&](std::size_t t) {
    OpCounter local;
    LotOptions o = opts;
    o.solver.seed = opts.solver.seed + t;
    try {
      if (t == 0) parts[t] = SolveLot(cxy, x, y, o, &local);
      if (t == 1) parts[t] = SolveSelfLot(cxx, x, o, &local);
      if (t == 2) parts[t] = SolveSelfLot(cyy, y, o, &local);
    } catch (...) {
      failures[t] = std::current_exception();
    }
    counts[t] = local.count();
  });
  if (ops != nullptr) {
    for (auto c : counts) ops->Add(c);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  out.lot_xy = parts[0]->value;
  out.lot_xx = parts[1]->value;
  out.lot_yy = parts[2]->value;
  for (std::size_t t = 0; t < 3; ++t) {
    out.reports[t] = std::move(parts[t]->report);
    out.couplings[t] = std::move(parts[t]->coupling);
  }
  out.value = out.lot_xy - 0.5 * (out.lot_xx + out.lot_yy);
  return out;
}

DivergenceValue DlotSqEuclidean(const DiscreteMeasure& x, const DiscreteMeasure& y, const LotOptions& opts,
                                OpCounter* ops) {
  const CostMatrix cxy = SqEuclideanFactored(x.points(), y.points());
  const CostMatrix cxx = SqEuclideanFactored(x.points(), x.points());
  const CostMatrix cyy = SqEuclideanFactored(y.points(), y.points());
  return Dlot(x, y, cxy, cxx, cyy, opts, ops);
}

double MmdNegCost(const DiscreteMeasure& x, const DiscreteMeasure& y, const CostMatrix& cxy,
                  const CostMatrix& cxx, const CostMatrix& cyy) {
  const Vector& a = x.weights();
  const Vector& b = y.weights();
  if (cxy.rows() != a.size() || cxy.cols() != b.size() || cxx.rows() != a.size() || cxx.cols() != a.size() ||
      cyy.rows() != b.size() || cyy.cols() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "costs do not match the measures");
  }
  return 0.5 * (2.0 * Bilinear(cxy, a, b, nullptr) - Bilinear(cxx, a, a, nullptr) - Bilinear(cyy, b, b, nullptr));
}

}  // namespace lrot
