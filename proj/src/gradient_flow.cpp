#include "lrot/gradient_flow.hpp"

#include <algorithm>
#include <string>

namespace lrot {

FlowObjective ParseFlowObjective(std::string_view name) {
  if (name == "dlot") return FlowObjective::kDlot;
  if (name == "lot") return FlowObjective::kLot;
  throw Error(ErrorKind::kUsageError, "unknown flow objective '" + std::string(name) + "'");
}

std::string_view FlowObjectiveName(FlowObjective objective) {
  return objective == FlowObjective::kDlot ? "dlot" : "lot";
}

namespace {

// P M and P^T 1 style products through the factors.
Matrix ApplyCoupling(const LowRankCoupling& p, const Matrix& m) {
  return p.q * (p.g.cwiseInverse().asDiagonal() * (p.r.transpose() * m));
}

Matrix ApplyCouplingTransposed(const LowRankCoupling& p, const Matrix& m) {
  return p.r * (p.g.cwiseInverse().asDiagonal() * (p.q.transpose() * m));
}

}  // namespace

Matrix DanskinGradPoints(const Matrix& x, const Matrix& y, const LowRankCoupling& p_xy,
                         const LowRankCoupling* p_xx, FlowObjective mode) {
  if (x.cols() != y.cols() || p_xy.q.rows() != x.rows() || p_xy.r.rows() != y.rows() ||
      p_xy.q.cols() != p_xy.rank() || p_xy.r.cols() != p_xy.rank()) {
    throw Error(ErrorKind::kDimensionMismatch, "coupling does not match the point clouds");
  }
  // grad_i = sum_j P_ij 2 (x_i - y_j) = 2 (rowsum_i(P) x_i - (P Y)_i)
  const Vector row_mass = ApplyCoupling(p_xy, Vector::Ones(y.rows())).col(0);
  Matrix grad = 2.0 * (row_mass.asDiagonal() * x - ApplyCoupling(p_xy, y));
  if (mode == FlowObjective::kLot) return grad;

  if (p_xx == nullptr) throw Error(ErrorKind::kInvalidArgument, "dlot gradient needs the self coupling");
  if (p_xx->q.rows() != x.rows() || p_xx->r.rows() != x.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, "self coupling does not match the point cloud");
  }
  // 1/2 grad of <C(X,X), P> = sum_j (P_ij + P_ji)(x_i - x_j)
  const Vector ones = Vector::Ones(x.rows());
  const Vector both = ApplyCoupling(*p_xx, ones).col(0) + ApplyCouplingTransposed(*p_xx, ones).col(0);
  grad -= both.asDiagonal() * x - ApplyCoupling(*p_xx, x) - ApplyCouplingTransposed(*p_xx, x);
  return grad;
}

FlowTrace FlowRun(const Matrix& x0, const DiscreteMeasure& target, const FlowConfig& cfg) {
  if (cfg.steps < 1) throw Error(ErrorKind::kInvalidArgument, "steps must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning rate must be positive");
  if (!target.has_points() || target.dim() != x0.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "target points do not match the particles");
  }
  const Index n = x0.rows();
  const Matrix& y = target.points();
  LotOptions opts = cfg.lot;
  opts.solver.rank = cfg.rank;

  FlowTrace trace;
  Matrix x = x0;
  trace.snapshots.emplace_back(0, x);

  // The target self term does not depend on X.
  double lot_yy = 0.0;
  if (cfg.objective == FlowObjective::kDlot) {
    LotOptions o = opts;
    o.solver.seed = opts.solver.seed + 2;
    lot_yy = SolveSelfLot(SqEuclideanFactored(y, y), target, o).value;
  }

  std::optional<LowRankCoupling> warm_xy;
  std::optional<LowRankCoupling> warm_xx;
  try {
    for (int step = 0; step <= cfg.steps; ++step) {
      const DiscreteMeasure mx = DiscreteMeasure::Uniform(x);
      SolveResult xy;
      std::optional<SolveResult> xx;
      const bool use_warm = cfg.warm_start && step > 0;
      if (cfg.objective == FlowObjective::kDlot) {
        LotOptions o = opts;
        o.solver.seed = opts.solver.seed + 1;
        if (use_warm && cfg.cold_self_restart) o.restarts = std::max(o.restarts, 2);
        xx = SolveSelfLot(SqEuclideanFactored(x, x), mx, o, nullptr, use_warm && warm_xx ? &*warm_xx : nullptr);
      }
      if (cfg.objective == FlowObjective::kDlot && mx == target) {
        // Identical inputs: the cross term is the self term (see Dlot).
        xy = *xx;
        lot_yy = xx->value;
      } else {
        xy = SolveLot(SqEuclideanFactored(x, y), mx, target, opts, nullptr,
                      use_warm && warm_xy ? &*warm_xy : nullptr);
      }
      const double loss =
          cfg.objective == FlowObjective::kDlot ? xy.value - 0.5 * (xx->value + lot_yy) : xy.value;
      trace.loss_trace.push_back(loss);
      if (step == cfg.steps) break;

      const Matrix grad =
          DanskinGradPoints(x, y, xy.coupling, xx ? &xx->coupling : nullptr, cfg.objective);
      if (!grad.allFinite()) throw Error(ErrorKind::kNonFiniteGradient, "gradient is not finite");
      trace.grad_norm_trace.push_back(grad.norm());
      const double factor = cfg.scale_by_mass ? static_cast<double>(n) : 1.0;
      x -= cfg.learning_rate * factor * grad;
      trace.steps_done = step + 1;

      warm_xy = std::move(xy.coupling);
      if (xx) warm_xx = std::move(xx->coupling);
      if (cfg.snapshot_every > 0 && (step + 1) % cfg.snapshot_every == 0 && step + 1 != cfg.steps) {
        trace.snapshots.emplace_back(step + 1, x);
      }
    }
  } catch (const Error& e) {
    trace.final_points = x;
    throw FlowError(e.kind(), e.message(), std::move(trace));
  }
  trace.snapshots.emplace_back(cfg.steps, x);
  trace.final_points = std::move(x);
  return trace;
}

}  // namespace lrot
