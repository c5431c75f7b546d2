#pragma once

#include <cstdint>
#include <vector>

#include "lrot/core.hpp"

namespace lrot {

enum class GammaMode { kFixed, kAdaptive };

struct SolverConfig {
  Index rank = 10;
  double gamma = 10.0;  // initial step; the adaptive schedule divides it by the squared gradient sup norm
  GammaMode gamma_mode = GammaMode::kAdaptive;
  double outer_tol = 1e-6;  // threshold on the stopping statistic Delta_k
  int max_outer_iters = 2000;
  bool use_stopping_criterion = true;  // false: always run max_outer_iters
  double inner_tol = 1e-9;             // L1 marginal residual accepted by the inner projection
  int max_inner_iters = 10000;
  // The inner loop gives up early (flagged unconverged) when the residual
  // shrinks by less than this factor over 100 iterations. 0 disables.
  double inner_stall_ratio = 0.5;
  double g_floor = 1e-10;
  double kernel_floor = 1e-300;
  bool dykstra_corrections = true;
  // Start each inner projection from the previous step's column scalings
  // (with the matching g factor). The projection point is unchanged.
  bool warm_start_inner = true;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct SolveReport {
  std::vector<double> cost_trace;
  std::vector<double> delta_trace;
  std::vector<double> gamma_trace;
  std::vector<std::uint64_t> op_count_trace;  // cumulative
  std::vector<int> inner_iters_trace;
  bool converged = false;
  int iterations = 0;
  double wall_time_seconds = 0.0;
  int inner_failures = 0;            // inner projections that stalled or hit max_inner_iters
  double max_inner_residual = 0.0;   // worst residual accepted from an inner projection
  std::uint64_t kernel_floor_hits = 0;  // kernel entries raised to kernel_floor
  double min_kernel_entry = 1.0;     // smallest raw kernel entry seen before clamping
  bool zero_gradient_seen = false;
};

/// Thrown when an outer solve fails midway; carries everything recorded so far.
class SolveError : public Error {
 public:
  SolveError(ErrorKind kind, const std::string& message, SolveReport partial)
      : Error(kind, message), partial_(std::move(partial)) {}
  const SolveReport& partial_report() const { return partial_; }

 private:
  SolveReport partial_;
};

/// The mirror-descent kernels (xi1, xi2, xi3).
struct MdKernels {
  Matrix xi1;  // n x r
  Matrix xi2;  // m x r
  Vector xi3;  // r
};

/// Raw gradient ingredients at the current iterate: C R, C^T Q and
/// omega = diag(Q^T C R). Every quantity the solver needs per iteration
/// (kernels, adaptive step, objective) is derived from these.
struct GradientBlocks {
  Matrix cr;     // n x r
  Matrix ctq;    // m x r
  Vector omega;  // r
};

GradientBlocks ComputeGradientBlocks(const LowRankCoupling& cur, const CostMatrix& cost,
                                     OpCounter* ops = nullptr);

/// max of |C R diag(1/g)|, |C^T Q diag(1/g)| and |omega / g^2|.
double GradientSupNorm(const GradientBlocks& blocks, const Vector& g);

struct KernelStats {
  std::uint64_t floor_hits = 0;
  double min_entry = 1.0;
};

MdKernels ComputeMdKernels(const LowRankCoupling& cur, const CostMatrix& cost, double gamma_k,
                           double kernel_floor = 1e-300, OpCounter* ops = nullptr);
MdKernels ComputeMdKernels(const LowRankCoupling& cur, const GradientBlocks& blocks, double gamma_k,
                           double kernel_floor, OpCounter* ops, KernelStats* stats = nullptr);

struct StepSize {
  double gamma = 0.0;
  bool zero_gradient = false;
};

/// gamma0 / ||gradient||_inf^2. A zero gradient leaves gamma0 unchanged.
StepSize AdaptiveStep(const GradientBlocks& blocks, const Vector& g, double gamma0);
double AdaptiveStep(const LowRankCoupling& cur, const CostMatrix& cost, double gamma0);

struct FactorPair {
  Matrix q;
  Matrix r;
};

/// KL projection onto the row-sum constraints Q1 = a, R1 = b (row rescaling).
FactorPair ProjectC1(const Matrix& xi1, const Matrix& xi2, const Vector& a, const Vector& b,
                     OpCounter* ops = nullptr);

/// KL projection onto Q^T 1 = R^T 1 = g:
/// g = (xi3 * colsum(xi1) * colsum(xi2))^(1/3), clamped below at g_floor, then
/// columns of xi1 and xi2 are rescaled to g.
LowRankCoupling ProjectC2(const Matrix& xi1, const Matrix& xi2, const Vector& xi3,
                          double g_floor = 1e-10, OpCounter* ops = nullptr);

struct InnerResult {
  LowRankCoupling coupling;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

/// Column scalings accumulated by one inner projection, relative to its input
/// kernels.
struct InnerScalings {
  Vector col_q;
  Vector col_r;
};

/// KL projection of the kernels onto the intersection of both constraint sets
/// by alternating Bregman projections with Dykstra corrections. On hitting
/// max_inner_iters, or stalling per inner_stall_ratio, the lowest-residual
/// iterate is returned with converged=false.
///
/// With `warm` set and sized to the rank, xi1 and xi2 columns are first
/// multiplied by warm->col_q, warm->col_r and xi3 divided by their product.
/// That shifts the KL objective by a constant on the feasible set, so the
/// projection is the same. On return `warm` holds the scalings of the result.
InnerResult InnerProjection(const MdKernels& xi, const Vector& a, const Vector& b,
                            const SolverConfig& cfg, OpCounter* ops = nullptr,
                            InnerScalings* warm = nullptr);

/// Symmetrized KL between consecutive iterates scaled by 1/gamma^2. Entries
/// are clamped at `floor` before taking logs.
double StoppingDelta(const LowRankCoupling& prev, const LowRankCoupling& cur, double gamma_k,
                     double floor = 1e-300);

/// Sum over all entries of (x - y) * (log x - log y).
double SymmetricKl(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                   double floor = 1e-300);

struct SolveResult {
  LowRankCoupling coupling;
  SolveReport report;
  double value = 0.0;  // <C, Q diag(1/g) R^T> at the returned iterate
};

/// Mirror descent on the factor triple starting from a feasible `init`.
SolveResult LotSolve(const CostMatrix& cost, const Vector& a, const Vector& b,
                     const SolverConfig& cfg, const LowRankCoupling& init, OpCounter* ops = nullptr);

}  // namespace lrot
