#include "lrot/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace lrot {

void SolverConfig::Validate() const {
  if (rank < 1) throw Error(ErrorKind::kInvalidArgument, "rank must be >= 1");
  if (!(gamma > 0.0)) throw Error(ErrorKind::kInvalidArgument, "gamma must be positive");
  if (!(outer_tol > 0.0) || !(inner_tol > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "tolerances must be positive");
  }
  if (max_outer_iters < 0 || max_inner_iters < 1) {
    throw Error(ErrorKind::kInvalidArgument, "iteration limits must be positive");
  }
  if (!(g_floor > 0.0) || !(kernel_floor > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "floors must be positive");
  }
}

GradientBlocks ComputeGradientBlocks(const LowRankCoupling& cur, const CostMatrix& cost, OpCounter* ops) {
  GradientBlocks blocks;
  blocks.cr = CostApply(cost, cur.r, ApplySide::kLeft, ops);
  blocks.ctq = CostApply(cost, cur.q, ApplySide::kTransposeLeft, ops);
  // diag(Q^T C R) reuses C R: omega_j = sum_i Q_ij (CR)_ij.
  blocks.omega = cur.q.cwiseProduct(blocks.cr).colwise().sum().transpose();
  Charge(ops, 2 * cur.q.size());
  return blocks;
}

double GradientSupNorm(const GradientBlocks& blocks, const Vector& g) {
  const Eigen::ArrayXd inv_g = g.array().inverse();
  double norm = 0.0;
  if (blocks.cr.size() > 0) {
    norm = std::max(norm, (blocks.cr.array().rowwise() * inv_g.transpose()).abs().maxCoeff());
  }
  if (blocks.ctq.size() > 0) {
    norm = std::max(norm, (blocks.ctq.array().rowwise() * inv_g.transpose()).abs().maxCoeff());
  }
  norm = std::max(norm, (blocks.omega.array() * inv_g.square()).abs().maxCoeff());
  return norm;
}

StepSize AdaptiveStep(const GradientBlocks& blocks, const Vector& g, double gamma0) {
  const double norm = GradientSupNorm(blocks, g);
  if (!(norm > 0.0)) return {gamma0, true};
  return {gamma0 / (norm * norm), false};
}

double AdaptiveStep(const LowRankCoupling& cur, const CostMatrix& cost, double gamma0) {
  return AdaptiveStep(ComputeGradientBlocks(cur, cost), cur.g, gamma0).gamma;
}

namespace {

// Applies the floor in place and records how often it was needed.
void ClampKernel(Eigen::Ref<Matrix> kernel, double floor, KernelStats* stats) {
  for (Index j = 0; j < kernel.cols(); ++j) {
    for (Index i = 0; i < kernel.rows(); ++i) {
      double& v = kernel(i, j);
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kNonFiniteKernel,
                    "kernel entry is not finite; the step size is too large for this cost scale");
      }
      if (stats != nullptr) stats->min_entry = std::min(stats->min_entry, v);
      if (v < floor) {
        v = floor;
        if (stats != nullptr) ++stats->floor_hits;
      }
    }
  }
}

}  // namespace

MdKernels ComputeMdKernels(const LowRankCoupling& cur, const GradientBlocks& blocks, double gamma_k,
                           double kernel_floor, OpCounter* ops, KernelStats* stats) {
  const Eigen::ArrayXd inv_g = cur.g.array().inverse();
  MdKernels k;
  k.xi1 = cur.q.array() * (-gamma_k * (blocks.cr.array().rowwise() * inv_g.transpose())).exp();
  k.xi2 = cur.r.array() * (-gamma_k * (blocks.ctq.array().rowwise() * inv_g.transpose())).exp();
  k.xi3 = cur.g.array() * (gamma_k * blocks.omega.array() * inv_g.square()).exp();
  Charge(ops, 4 * (cur.q.size() + cur.r.size()) + 5 * cur.g.size());
  ClampKernel(k.xi1, kernel_floor, stats);
  ClampKernel(k.xi2, kernel_floor, stats);
  ClampKernel(k.xi3, kernel_floor, stats);
  return k;
}

MdKernels ComputeMdKernels(const LowRankCoupling& cur, const CostMatrix& cost, double gamma_k,
                           double kernel_floor, OpCounter* ops) {
  return ComputeMdKernels(cur, ComputeGradientBlocks(cur, cost, ops), gamma_k, kernel_floor, ops);
}

namespace {

Vector SafeRowScale(const Vector& target, const Vector& sums) {
  for (Index i = 0; i < sums.size(); ++i) {
    if (!(sums[i] > 0.0) || !std::isfinite(sums[i])) {
      throw Error(ErrorKind::kZeroRowSum, "row " + std::to_string(i) + " of a kernel sums to zero");
    }
  }
  return target.cwiseQuotient(sums);
}

void CheckColumnSums(const Vector& sums) {
  for (Index j = 0; j < sums.size(); ++j) {
    if (!(sums[j] > 0.0) || !std::isfinite(sums[j])) {
      throw Error(ErrorKind::kZeroColumnSum, "column " + std::to_string(j) + " of a kernel sums to zero");
    }
  }
}

}  // namespace

FactorPair ProjectC1(const Matrix& xi1, const Matrix& xi2, const Vector& a, const Vector& b, OpCounter* ops) {
  if (xi1.rows() != a.size() || xi2.rows() != b.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "kernel rows do not match marginals");
  }
  const Vector sq = SafeRowScale(a, xi1.rowwise().sum());
  const Vector sr = SafeRowScale(b, xi2.rowwise().sum());
  Charge(ops, 2 * (xi1.size() + xi2.size()) + a.size() + b.size());
  return {sq.asDiagonal() * xi1, sr.asDiagonal() * xi2};
}

LowRankCoupling ProjectC2(const Matrix& xi1, const Matrix& xi2, const Vector& xi3, double g_floor,
                          OpCounter* ops) {
  if (xi1.cols() != xi3.size() || xi2.cols() != xi3.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "kernel ranks disagree");
  }
  const Vector c1 = xi1.colwise().sum().transpose();
  const Vector c2 = xi2.colwise().sum().transpose();
  CheckColumnSums(c1);
  CheckColumnSums(c2);
  Vector g = (xi3.array() * c1.array() * c2.array()).pow(1.0 / 3.0).matrix();
  g = g.cwiseMax(g_floor);
  Charge(ops, 2 * (xi1.size() + xi2.size()) + 6 * xi3.size());
  LowRankCoupling out;
  out.q = xi1 * g.cwiseQuotient(c1).asDiagonal();
  out.r = xi2 * g.cwiseQuotient(c2).asDiagonal();
  out.g = std::move(g);
  return out;
}

namespace {

// q <- diag(mult) q; returns the new column sums.
Vector ScaleRows(Matrix& q, const Vector& mult) {
  Vector cols(q.cols());
  for (Index j = 0; j < q.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < q.rows(); ++i) {
      q(i, j) *= mult[i];
      acc += q(i, j);
    }
    cols[j] = acc;
  }
  return cols;
}

// q <- q diag(mult); fills the new row and column sums.
void ScaleCols(Matrix& q, const Vector& mult, Vector& rows, Vector& cols) {
  rows.setZero(q.rows());
  cols.resize(q.cols());
  for (Index j = 0; j < q.cols(); ++j) {
    double acc = 0.0;
    for (Index i = 0; i < q.rows(); ++i) {
      q(i, j) *= mult[j];
      acc += q(i, j);
      rows[i] += q(i, j);
    }
    cols[j] = acc;
  }
}

}  // namespace

InnerResult InnerProjection(const MdKernels& xi, const Vector& a, const Vector& b,
                            const SolverConfig& cfg, OpCounter* ops, InnerScalings* warm) {
  const Index n = xi.xi1.rows();
  const Index m = xi.xi2.rows();
  const Index r = xi.xi3.size();
  if (n != a.size() || m != b.size() || xi.xi1.cols() != r || xi.xi2.cols() != r) {
    throw Error(ErrorKind::kDimensionMismatch, "kernel shapes do not match marginals");
  }

  Matrix q = xi.xi1;
  Matrix rr = xi.xi2;
  Vector g = xi.xi3;
  Vector total_q = Vector::Ones(r);
  Vector total_r = Vector::Ones(r);
  if (warm != nullptr && warm->col_q.size() == r && warm->col_r.size() == r && warm->col_q.allFinite() &&
      warm->col_r.allFinite() && (warm->col_q.array() > 0.0).all() && (warm->col_r.array() > 0.0).all()) {
    total_q = warm->col_q;
    total_r = warm->col_r;
    q = q * total_q.asDiagonal();
    rr = rr * total_r.asDiagonal();
    g = g.cwiseQuotient(total_q.cwiseProduct(total_r));
    Charge(ops, q.size() + rr.size() + 2 * r);
  }
  InnerScalings best_scalings{total_q, total_r};

  // Both constraint sets are affine, so each Dykstra correction is the
  // scaling that the projection applied: row scalings for the first set,
  // column scalings (and a g factor) for the second. Each correction is
  // multiplied in within the same sweep as the projection that follows it.
  const bool dykstra = cfg.dykstra_corrections;
  Vector row_corr_q = Vector::Ones(n);
  Vector row_corr_r = Vector::Ones(m);
  Vector col_corr_q = Vector::Ones(r);
  Vector col_corr_r = Vector::Ones(r);
  Vector g_corr = Vector::Ones(r);

  Vector rows_q = q.rowwise().sum();
  Vector rows_r = rr.rowwise().sum();
  Vector cols_q(r);
  Vector cols_r(r);
  Charge(ops, q.size() + rr.size());

  InnerResult best;
  best.residual = std::numeric_limits<double>::infinity();
  double window_start = std::numeric_limits<double>::infinity();
  const Index mass = q.size() + rr.size();

  int ran = 0;
  for (int it = 1; it <= cfg.max_inner_iters; ++it) {
    ran = it;
    // Row-sum constraints.
    if (dykstra) {
      rows_q = rows_q.cwiseProduct(row_corr_q);
      rows_r = rows_r.cwiseProduct(row_corr_r);
    }
    const Vector sq = SafeRowScale(a, rows_q);
    const Vector sr = SafeRowScale(b, rows_r);
    Vector c1 = ScaleRows(q, dykstra ? Vector(row_corr_q.cwiseProduct(sq)) : sq);
    Vector c2 = ScaleRows(rr, dykstra ? Vector(row_corr_r.cwiseProduct(sr)) : sr);
    if (dykstra) {
      row_corr_q = sq.cwiseInverse();
      row_corr_r = sr.cwiseInverse();
    }

    // Shared column-sum constraint.
    if (dykstra) {
      c1 = c1.cwiseProduct(col_corr_q);
      c2 = c2.cwiseProduct(col_corr_r);
      g = g.cwiseProduct(g_corr);
    }
    CheckColumnSums(c1);
    CheckColumnSums(c2);
    Vector g_new = (g.array() * c1.array() * c2.array()).pow(1.0 / 3.0).matrix().cwiseMax(cfg.g_floor);
    const Vector scale_q = g_new.cwiseQuotient(c1);
    const Vector scale_r = g_new.cwiseQuotient(c2);
    const Vector mult_q = dykstra ? Vector(col_corr_q.cwiseProduct(scale_q)) : scale_q;
    const Vector mult_r = dykstra ? Vector(col_corr_r.cwiseProduct(scale_r)) : scale_r;
    ScaleCols(q, mult_q, rows_q, cols_q);
    ScaleCols(rr, mult_r, rows_r, cols_r);
    total_q = total_q.cwiseProduct(mult_q);
    total_r = total_r.cwiseProduct(mult_r);
    if (dykstra) {
      col_corr_q = scale_q.cwiseInverse();
      col_corr_r = scale_r.cwiseInverse();
      g_corr = g.cwiseQuotient(g_new);
    }
    g = std::move(g_new);
    Charge(ops, 6 * mass + (dykstra ? 4 : 2) * (n + m) + 16 * r);

    const double residual = (rows_q - a).lpNorm<1>() + (rows_r - b).lpNorm<1>() + (cols_q - g).lpNorm<1>() +
                            (cols_r - g).lpNorm<1>();
    Charge(ops, 2 * (n + m + 2 * r));
    if (residual < best.residual) {
      // Plain assignment reuses the storage of the previous best.
      best.coupling.q = q;
      best.coupling.r = rr;
      best.coupling.g = g;
      best.residual = residual;
      best.iterations = it;
      best_scalings.col_q = total_q;
      best_scalings.col_r = total_r;
    }
    if (residual <= cfg.inner_tol) {
      best.converged = true;
      best.iterations = it;
      if (warm != nullptr) *warm = std::move(best_scalings);
      return best;
    }
    if (it % 100 == 0) {
      if (cfg.inner_stall_ratio > 0.0 && best.residual > cfg.inner_stall_ratio * window_start) break;
      window_start = best.residual;
    }
  }
  best.converged = false;
  best.iterations = ran;
  if (warm != nullptr) *warm = std::move(best_scalings);
  return best;
}

double SymmetricKl(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, double floor) {
  const Eigen::ArrayXXd xc = x.array().max(floor);
  const Eigen::ArrayXXd yc = y.array().max(floor);
  return ((xc - yc) * (xc.log() - yc.log())).sum();
}

double StoppingDelta(const LowRankCoupling& prev, const LowRankCoupling& cur, double gamma_k, double floor) {
  if (prev.q.rows() != cur.q.rows() || prev.r.rows() != cur.r.rows() || prev.g.size() != cur.g.size() ||
      prev.q.cols() != cur.q.cols() || prev.r.cols() != cur.r.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "iterates have different shapes");
  }
  // KL(x,y) + KL(y,x) = sum (x - y)(log x - log y).
  const double kl = SymmetricKl(cur.q, prev.q, floor) + SymmetricKl(cur.r, prev.r, floor) +
                    SymmetricKl(cur.g, prev.g, floor);
  return kl / (gamma_k * gamma_k);
}

SolveResult LotSolve(const CostMatrix& cost, const Vector& a, const Vector& b, const SolverConfig& cfg,
                     const LowRankCoupling& init, OpCounter* ops) {
  cfg.Validate();
  const auto start = std::chrono::steady_clock::now();
  const Index n = a.size();
  const Index m = b.size();
  if (cost.rows() != n || cost.cols() != m) {
    throw Error(ErrorKind::kDimensionMismatch, "cost shape does not match marginals");
  }
  if (init.q.rows() != n || init.r.rows() != m || init.q.cols() != init.rank() ||
      init.r.cols() != init.rank()) {
    throw Error(ErrorKind::kDimensionMismatch, "initial coupling shape does not match marginals");
  }
  if (init.rank() > std::min(n, m)) {
    throw Error(ErrorKind::kInvalidArgument, "rank exceeds min(n, m)");
  }
  if (!HasValidSigns(init)) throw Error(ErrorKind::kInfeasibleInit, "initial factors have invalid signs");
  const double init_residual = MarginalResidual(init, a, b);
  if (!(init_residual <= cfg.inner_tol)) {
    throw Error(ErrorKind::kInfeasibleInit,
                "initial marginal residual " + std::to_string(init_residual) + " exceeds inner_tol");
  }

  OpCounter local_ops;
  OpCounter* counter = ops != nullptr ? ops : &local_ops;

  SolveResult result;
  SolveReport& report = result.report;
  LowRankCoupling cur = init;
  GradientBlocks blocks = ComputeGradientBlocks(cur, cost, counter);
  InnerScalings scalings;

  try {
    for (int k = 1; k <= cfg.max_outer_iters; ++k) {
      double gamma_k = cfg.gamma;
      if (cfg.gamma_mode == GammaMode::kAdaptive) {
        const StepSize step = AdaptiveStep(blocks, cur.g, cfg.gamma);
        gamma_k = step.gamma;
        report.zero_gradient_seen |= step.zero_gradient;
        Charge(counter, cur.q.size() + cur.r.size() + 3 * cur.g.size());
      }
      KernelStats stats;
      const MdKernels kernels = ComputeMdKernels(cur, blocks, gamma_k, cfg.kernel_floor, counter, &stats);
      report.kernel_floor_hits += stats.floor_hits;
      report.min_kernel_entry = std::min(report.min_kernel_entry, stats.min_entry);

      InnerResult inner =
          InnerProjection(kernels, a, b, cfg, counter, cfg.warm_start_inner ? &scalings : nullptr);
      if (!inner.converged) ++report.inner_failures;
      report.max_inner_residual = std::max(report.max_inner_residual, inner.residual);

      const double delta = StoppingDelta(cur, inner.coupling, gamma_k, cfg.kernel_floor);
      Charge(counter, 4 * (cur.q.size() + cur.r.size() + cur.g.size()));
      cur = std::move(inner.coupling);
      blocks = ComputeGradientBlocks(cur, cost, counter);
      const double value = (blocks.omega.array() / cur.g.array()).sum();

      report.cost_trace.push_back(value);
      report.delta_trace.push_back(delta);
      report.gamma_trace.push_back(gamma_k);
      report.inner_iters_trace.push_back(inner.iterations);
      report.op_count_trace.push_back(counter->count());
      report.iterations = k;

      // A NaN delta (clamped zeros on both sides) counts as not converged.
      if (cfg.use_stopping_criterion && std::isfinite(delta) && delta < cfg.outer_tol) {
        report.converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    throw SolveError(e.kind(), e.message(), report);
  }

  result.value = (blocks.omega.array() / cur.g.array()).sum();
  result.coupling = std::move(cur);
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace lrot
