#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "lrot/core.hpp"
#include "lrot/divergences.hpp"

namespace lrot {

enum class FlowObjective { kDlot, kLot };

FlowObjective ParseFlowObjective(std::string_view name);
std::string_view FlowObjectiveName(FlowObjective objective);

/// Gradient of X -> <C(X, Y), P_xy> (lot) or of
/// X -> <C(X, Y), P_xy> - 1/2 <C(X, X), P_xx> (dlot) for squared Euclidean
/// costs, with the couplings held fixed. Uses the factors only; P is never
/// formed.
Matrix DanskinGradPoints(const Matrix& x, const Matrix& y, const LowRankCoupling& p_xy,
                         const LowRankCoupling* p_xx, FlowObjective mode);

struct FlowConfig {
  Index rank = 100;
  int steps = 300;
  double learning_rate = 0.1;
  FlowObjective objective = FlowObjective::kDlot;
  LotOptions lot;  // lot.solver.rank is overwritten by `rank`
  int snapshot_every = 0;  // 0: first and last positions only
  bool warm_start = true;
  // With warm starts, also solve the self term from a cold start each step and
  // keep the lower value. A warm self coupling can sit in a poor local minimum,
  // and the repulsive part of the dlot gradient then drives the particles
  // apart instead of towards the target.
  bool cold_self_restart = true;
  // Divide each particle's gradient by its mass, i.e. step along the
  // Wasserstein gradient. Without it the step shrinks like 1/n.
  bool scale_by_mass = true;
};

struct FlowTrace {
  std::vector<std::pair<int, Matrix>> snapshots;  // (step, positions)
  std::vector<double> loss_trace;                 // objective at X_0 .. X_steps
  std::vector<double> grad_norm_trace;            // Frobenius norm of the step direction, per step
  Matrix final_points;
  int steps_done = 0;
};

/// Thrown when a flow aborts; carries the trace recorded so far.
class FlowError : public Error {
 public:
  FlowError(ErrorKind kind, const std::string& message, FlowTrace partial)
      : Error(kind, message), partial_(std::move(partial)) {}
  const FlowTrace& partial_trace() const { return partial_; }

 private:
  FlowTrace partial_;
};

/// Particle gradient descent from x0 (uniform weights) towards `target`.
FlowTrace FlowRun(const Matrix& x0, const DiscreteMeasure& target, const FlowConfig& cfg);

}  // namespace lrot
