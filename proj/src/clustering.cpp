#include "lrot/clustering.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <random>
#include <utility>

#include "lrot/parallel.hpp"
#include "numeric.hpp"

namespace lrot {

namespace {

struct FixedProjection {
  Matrix q;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

// Alternating row/column rescaling of xi onto {Q1 = a, Q^T 1 = g}.
FixedProjection ProjectFixedMarginals(const Matrix& xi, const Vector& a, const Vector& g, const SolverConfig& cfg,
                                      OpCounter* ops) {
  FixedProjection best;
  best.residual = std::numeric_limits<double>::infinity();
  Matrix q = xi;
  double window_start = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_inner_iters; ++it) {
    best.iterations = it;
    const Vector rows = q.rowwise().sum();
    for (Index i = 0; i < rows.size(); ++i) {
      if (!(rows[i] > 0.0) || !std::isfinite(rows[i])) {
        throw Error(ErrorKind::kZeroRowSum, "row " + std::to_string(i) + " of a kernel sums to zero");
      }
    }
    q = a.cwiseQuotient(rows).asDiagonal() * q;
    const Vector cols = q.colwise().sum().transpose();
    for (Index j = 0; j < cols.size(); ++j) {
      if (!(cols[j] > 0.0) || !std::isfinite(cols[j])) {
        throw Error(ErrorKind::kZeroColumnSum, "column " + std::to_string(j) + " of a kernel sums to zero");
      }
    }
    q = q * g.cwiseQuotient(cols).asDiagonal();
    const double residual = (q.rowwise().sum() - a).lpNorm<1>() + (q.colwise().sum().transpose() - g).lpNorm<1>();
    Charge(ops, 8 * q.size() + 2 * (q.rows() + q.cols()));
    if (residual < best.residual) {
      best.q = q;
      best.residual = residual;
    }
    if (residual <= cfg.inner_tol) {
      best.converged = true;
      return best;
    }
    if (it % 100 == 0) {
      if (cfg.inner_stall_ratio > 0.0 && best.residual > cfg.inner_stall_ratio * window_start) break;
      window_start = best.residual;
    }
  }
  return best;
}

struct SymmetricProjection {
  Matrix q;
  Vector g;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

SymmetricProjection ProjectSymmetric(const Matrix& xi, const Vector& xi_g, const Vector& a,
                                     const std::optional<Vector>& fixed_g, const SolverConfig& cfg,
                                     OpCounter* ops) {
  SymmetricProjection out;
  if (fixed_g) {
    FixedProjection p = ProjectFixedMarginals(xi, a, *fixed_g, cfg, ops);
    out.q = std::move(p.q);
    out.g = *fixed_g;
    out.iterations = p.iterations;
    out.converged = p.converged;
    out.residual = p.residual;
    return out;
  }
  // With identical kernels on both sides the general projection keeps Q = R.
  InnerResult inner = InnerProjection(MdKernels{xi, xi, xi_g}, a, a, cfg, ops);
  out.q = std::move(inner.coupling.q);
  out.g = std::move(inner.coupling.g);
  out.iterations = inner.iterations;
  out.converged = inner.converged;
  out.residual = inner.residual;
  return out;
}

void CheckFixedG(const std::optional<Vector>& fixed_g, Index k) {
  if (!fixed_g) return;
  if (fixed_g->size() != k) throw Error(ErrorKind::kDimensionMismatch, "fixed g has the wrong length");
  if ((fixed_g->array() <= 0.0).any() || !fixed_g->allFinite()) {
    throw Error(ErrorKind::kNonPositiveWeight, "fixed g must be positive");
  }
  if (std::abs(fixed_g->sum() - 1.0) > 1e-9) {
    throw Error(ErrorKind::kWeightSumMismatch, "fixed g must sum to one");
  }
}

}  // namespace

SymmetricSolveResult SymmetricLotSolve(const CostMatrix& cost, const Vector& a, const SolverConfig& cfg,
                                       const Matrix& init_q, const std::optional<Vector>& fixed_g,
                                       OpCounter* ops) {
  cfg.Validate();
  const auto start = std::chrono::steady_clock::now();
  const Index n = a.size();
  const Index k = init_q.cols();
  if (cost.rows() != n || cost.cols() != n || init_q.rows() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "cost, weights and initial assignment disagree in size");
  }
  if (k < 1 || k > n) throw Error(ErrorKind::kInvalidArgument, "cluster count must lie in [1, n]");
  CheckFixedG(fixed_g, k);

  Matrix q = init_q;
  Vector g = fixed_g ? *fixed_g : Vector(q.colwise().sum().transpose());
  if (!q.allFinite() || (q.array() < 0.0).any() || (g.array() <= 0.0).any()) {
    throw Error(ErrorKind::kInfeasibleInit, "initial assignment has invalid signs");
  }
  const double init_residual =
      (q.rowwise().sum() - a).lpNorm<1>() + 2.0 * (q.colwise().sum().transpose() - g).lpNorm<1>();
  if (!(init_residual <= cfg.inner_tol)) {
    throw Error(ErrorKind::kInfeasibleInit,
                "initial marginal residual " + std::to_string(init_residual) + " exceeds inner_tol");
  }

  OpCounter local_ops;
  OpCounter* counter = ops != nullptr ? ops : &local_ops;
  SymmetricSolveResult result;
  SolveReport& report = result.report;

  Matrix cq = CostApply(cost, q, ApplySide::kLeft, counter);
  Vector omega = q.cwiseProduct(cq).colwise().sum().transpose();
  Charge(counter, 2 * q.size());

  try {
    for (int it = 1; it <= cfg.max_outer_iters; ++it) {
      const Eigen::ArrayXd inv_g = g.array().inverse();
      double gamma_k = cfg.gamma;
      if (cfg.gamma_mode == GammaMode::kAdaptive) {
        const double norm = std::max((cq.array().rowwise() * inv_g.transpose()).abs().maxCoeff(),
                                     (omega.array() * inv_g.square()).abs().maxCoeff());
        Charge(counter, q.size() + 2 * k);
        if (norm > 0.0) {
          gamma_k = cfg.gamma / (norm * norm);
        } else {
          report.zero_gradient_seen = true;
        }
      }

      Matrix xi = q.array() * (-2.0 * gamma_k * (cq.array().rowwise() * inv_g.transpose())).exp();
      Vector xi_g = g.array() * (gamma_k * omega.array() * inv_g.square()).exp();
      Charge(counter, 4 * q.size() + 5 * k);
      for (Index j = 0; j < xi.cols(); ++j) {
        for (Index i = 0; i < xi.rows(); ++i) {
          double& v = xi(i, j);
          if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteKernel, "kernel entry is not finite");
          report.min_kernel_entry = std::min(report.min_kernel_entry, v);
          if (v < cfg.kernel_floor) {
            v = cfg.kernel_floor;
            ++report.kernel_floor_hits;
          }
        }
      }
      for (Index j = 0; j < k; ++j) {
        if (!std::isfinite(xi_g[j])) throw Error(ErrorKind::kNonFiniteKernel, "kernel entry is not finite");
        xi_g[j] = std::max(xi_g[j], cfg.kernel_floor);
      }

      SymmetricProjection proj = ProjectSymmetric(xi, xi_g, a, fixed_g, cfg, counter);
      if (!proj.converged) ++report.inner_failures;
      report.max_inner_residual = std::max(report.max_inner_residual, proj.residual);

      // Same statistic as the general solver evaluated at R = Q.
      const double delta =
          (2.0 * SymmetricKl(proj.q, q, cfg.kernel_floor) + SymmetricKl(proj.g, g, cfg.kernel_floor)) /
          (gamma_k * gamma_k);
      Charge(counter, 4 * (2 * q.size() + k));
      q = std::move(proj.q);
      g = std::move(proj.g);
      cq = CostApply(cost, q, ApplySide::kLeft, counter);
      omega = q.cwiseProduct(cq).colwise().sum().transpose();
      Charge(counter, 2 * q.size());
      const double value = (omega.array() / g.array()).sum();

      report.cost_trace.push_back(value);
      report.delta_trace.push_back(delta);
      report.gamma_trace.push_back(gamma_k);
      report.inner_iters_trace.push_back(proj.iterations);
      report.op_count_trace.push_back(counter->count());
      report.iterations = it;
      if (cfg.use_stopping_criterion && std::isfinite(delta) && delta < cfg.outer_tol) {
        report.converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw SolveError(e.kind(), e.message(), report);
  }

  result.value = (omega.array() / g.array()).sum();
  result.q = std::move(q);
  result.g = std::move(g);
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Matrix RandomSymmetricInit(const Vector& a, Index k, std::uint64_t seed, const SolverConfig& cfg,
                           const std::optional<Vector>& fixed_g) {
  const Index n = a.size();
  if (k < 1 || k > n) throw Error(ErrorKind::kInvalidArgument, "cluster count must lie in [1, n]");
  CheckFixedG(fixed_g, k);
  std::mt19937_64 rng(seed);
  const Matrix xi = detail::PositiveGaussian(n, k, rng);
  const Vector xi_g = detail::PositiveGaussian(k, 1, rng).col(0);
  SymmetricProjection proj = ProjectSymmetric(xi, xi_g, a, fixed_g, cfg, nullptr);
  if (!proj.converged) {
    throw Error(ErrorKind::kInnerNoConvergence,
                "random assignment could not be made feasible, residual " + std::to_string(proj.residual));
  }
  return proj.q;
}

Matrix KMeansSymmetricInit(const Matrix& points, const Vector& a, Index k, double epsilon, std::uint64_t seed,
                           OpCounter* ops) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::kInvalidArgument, "epsilon must be positive");
  const KMeansResult km = LloydKMeansRestarts(points, a, k, seed, 10, ops);
  const Matrix logits = -SqEuclideanDense(points, km.centroids) / epsilon;
  const Vector lse = detail::RowLogSumExp(logits);
  Matrix q = (logits.colwise() - lse).array().exp();
  q = a.asDiagonal() * q;
  Charge(ops, 6 * q.size() * std::max<Index>(1, points.cols()));
  return q;
}

std::vector<int> HardLabels(const Matrix& q) {
  std::vector<int> labels(q.rows(), 0);
  for (Index i = 0; i < q.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < q.cols(); ++j) {
      if (q(i, j) > q(i, best)) best = j;
    }
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

double ClusterObjective(const CostMatrix& cost, const Matrix& q, OpCounter* ops) {
  const Matrix cq = CostApply(cost, q, ApplySide::kLeft, ops);
  const Eigen::ArrayXd mass = q.colwise().sum().transpose().array();
  const Eigen::ArrayXd omega = q.cwiseProduct(cq).colwise().sum().transpose().array();
  Charge(ops, 3 * q.size());
  double total = 0.0;
  for (Index j = 0; j < q.cols(); ++j) {
    if (mass[j] > 0.0) total += omega[j] / mass[j];
  }
  return total;
}

double AdjustedRandIndex(std::span<const int> labels_a, std::span<const int> labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "label vectors differ in length");
  }
  const std::size_t n = labels_a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < n; ++i) {
    table[{labels_a[i], labels_b[i]}] += 1.0;
    rows[labels_a[i]] += 1.0;
    cols[labels_b[i]] += 1.0;
  }
  auto pairs = [](double c) { return 0.5 * c * (c - 1.0); };
  double index = 0.0;
  for (const auto& [key, c] : table) index += pairs(c);
  double sum_rows = 0.0;
  for (const auto& [key, c] : rows) sum_rows += pairs(c);
  double sum_cols = 0.0;
  for (const auto& [key, c] : cols) sum_cols += pairs(c);
  const double total = pairs(static_cast<double>(n));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

ClusterResult LotCluster(const CostMatrix& cost, const Vector& a, Index k, const ClusterOptions& opts,
                         OpCounter* ops) {
  const Index n = a.size();
  if (cost.rows() != n || cost.cols() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "clustering needs a square cost matching the weights");
  }
  if (k < 1 || k > n) throw Error(ErrorKind::kInvalidArgument, "cluster count must lie in [1, n]");
  if (!cost.is_factored() && cost.AsymmetryGap() > 1e-9) {
    throw Error(ErrorKind::kAsymmetricCost, "clustering cost is not symmetric");
  }
  CheckFixedG(opts.fixed_g, k);
  if (opts.init_q && (opts.init_q->rows() != n || opts.init_q->cols() != k)) {
    throw Error(ErrorKind::kDimensionMismatch, "initial assignment has the wrong shape");
  }

  if (k == 1) {
    // one column: Q = a is the only feasible point
    ClusterResult res;
    res.q = a;
    res.g = Vector::Constant(1, a.sum());
    res.objective = ClusterObjective(cost, res.q, ops);
    res.labels.assign(static_cast<std::size_t>(n), 0);
    res.report.converged = true;
    res.report.cost_trace.push_back(res.objective);
    res.seed = opts.solver.seed;
    return res;
  }

  const std::size_t restarts = static_cast<std::size_t>(std::max(1, opts.restarts));
  std::vector<std::optional<ClusterResult>> results(restarts);
  std::vector<std::exception_ptr> failures(restarts);
  std::vector<std::uint64_t> counts(restarts, 0);

  ParallelFor(restarts, [&](std::size_t t) {
    OpCounter local;
    try {
      SolverConfig cfg = opts.solver;
      cfg.seed = opts.solver.seed + t;
      Matrix start;
      if (t == 0 && opts.init_q) {
        Matrix xi = opts.init_q->cwiseMax(cfg.kernel_floor);
        const Vector xi_g = xi.colwise().sum().transpose();
        SymmetricProjection proj = ProjectSymmetric(xi, xi_g, a, opts.fixed_g, cfg, &local);
        if (!proj.converged) {
          throw Error(ErrorKind::kInnerNoConvergence, "initial assignment could not be made feasible");
        }
        start = std::move(proj.q);
      } else {
        start = RandomSymmetricInit(a, k, cfg.seed, cfg, opts.fixed_g);
      }
      SymmetricSolveResult solved = SymmetricLotSolve(cost, a, cfg, start, opts.fixed_g, &local);
      ClusterResult res;
      res.objective = ClusterObjective(cost, solved.q, &local);
      res.labels = HardLabels(solved.q);
      res.q = std::move(solved.q);
      res.g = std::move(solved.g);
      res.report = std::move(solved.report);
      res.seed = cfg.seed;
      results[t] = std::move(res);
    } catch (...) {
      failures[t] = std::current_exception();
    }
    counts[t] = local.count();
  });

  std::uint64_t total_ops = 0;
  for (auto c : counts) total_ops += c;
  if (ops != nullptr) ops->Add(total_ops);

  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < restarts; ++t) {
    if (!results[t]) continue;
    if (!best || results[t]->objective < results[*best]->objective) best = t;
  }
  if (!best) std::rethrow_exception(failures[0]);
  return std::move(*results[*best]);
}

KMeansEquivalence KMeansEquivalenceCheck(const Matrix& points, Index k, std::uint64_t seed,
                                         const ClusterOptions& opts) {
  const Index n = points.rows();
  const Vector a = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const CostMatrix cost = SqEuclideanFactored(points, points);
  ClusterOptions local = opts;
  local.solver.seed = seed;
  KMeansEquivalence out;
  out.cluster = LotCluster(cost, a, k, local);
  out.lot_objective = static_cast<double>(n) * out.cluster.objective;
  out.lloyd = LloydKMeansRestarts(points, Vector::Ones(n), k, seed, 10);
  out.lloyd_objective = out.lloyd.objective;
  return out;
}

CostMatrix ShortestPathCost(const Matrix& points, std::optional<double> bandwidth, double* bandwidth_used) {
  const Index n = points.rows();
  if (n == 0) throw Error(ErrorKind::kEmptyMeasure, "no points");
  if (n > 5000) throw Error(ErrorKind::kSizeCapExceeded, "shortest-path costs are limited to 5000 points");
  const Matrix sq = SqEuclideanDense(points, points).cwiseMax(0.0);

  double sigma = 0.0;
  if (bandwidth) {
    sigma = *bandwidth;
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw Error(ErrorKind::kNonPositiveBandwidth, "bandwidth must be positive");
    }
  } else if (n > 1) {
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < j; ++i) dists.push_back(std::sqrt(sq(i, j)));
    }
    const std::size_t mid = dists.size() / 2;
    std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
    sigma = dists[mid];
    if (dists.size() % 2 == 0) {
      const double lower = *std::max_element(dists.begin(), dists.begin() + mid);
      sigma = 0.5 * (sigma + lower);
    }
    if (!(sigma > 0.0)) {
      throw Error(ErrorKind::kNonPositiveBandwidth, "median pairwise distance is zero");
    }
  } else {
    sigma = 1.0;
  }
  if (bandwidth_used != nullptr) *bandwidth_used = sigma;

  const Matrix w = 1.0 - (-sq.array() / (2.0 * sigma * sigma)).exp();
  Matrix dist(n, n);
  ParallelFor(static_cast<std::size_t>(n), [&](std::size_t src) {
    // Dense Dijkstra with an O(n) scan per step.
    Vector d = Vector::Constant(n, std::numeric_limits<double>::infinity());
    std::vector<char> done(n, 0);
    d[static_cast<Index>(src)] = 0.0;
    for (Index step = 0; step < n; ++step) {
      Index u = -1;
      for (Index v = 0; v < n; ++v) {
        if (!done[v] && (u < 0 || d[v] < d[u])) u = v;
      }
      done[u] = 1;
      for (Index v = 0; v < n; ++v) {
        if (!done[v] && d[u] + w(u, v) < d[v]) d[v] = d[u] + w(u, v);
      }
    }
    dist.col(static_cast<Index>(src)) = d;
  });
  Matrix sym = dist.cwiseMin(dist.transpose());
  sym.diagonal().setZero();
  return CostMatrix::FromDense(std::move(sym));
}

}  // namespace lrot
