#include "lrot/initializers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "lrot/clustering.hpp"
#include "numeric.hpp"

namespace lrot {

InitKind ParseInitKind(std::string_view name) {
  if (name == "random") return InitKind::kRandom;
  if (name == "rank2") return InitKind::kRank2;
  if (name == "kmeans") return InitKind::kKMeans;
  if (name == "general-kmeans") return InitKind::kGeneralizedKMeans;
  throw Error(ErrorKind::kUsageError, "unknown init strategy '" + std::string(name) + "'");
}

std::string_view InitKindName(InitKind kind) {
  switch (kind) {
    case InitKind::kRandom: return "random";
    case InitKind::kRank2: return "rank2";
    case InitKind::kKMeans: return "kmeans";
    case InitKind::kGeneralizedKMeans: return "general-kmeans";
  }
  return "unknown";
}

namespace {

void CheckRank(Index rank, Index n, Index m) {
  if (rank < 1) throw Error(ErrorKind::kInvalidArgument, "rank must be >= 1");
  if (rank > std::min(n, m)) throw Error(ErrorKind::kInvalidArgument, "rank exceeds min(n, m)");
}

}  // namespace

// Pushes a nearly feasible triple onto the constraint sets. Triples with
// near-zero blocks can make the projection crawl; those are blended with the
// product coupling (a g^T, b g^T, g), which is feasible and well conditioned,
// before trying again.
LowRankCoupling RepairCoupling(LowRankCoupling c, const Vector& a, const Vector& b, const SolverConfig& cfg,
                               OpCounter* ops) {
  double residual = 0.0;
  for (double blend : {0.0, 1e-4, 1e-2, 0.1}) {
    LowRankCoupling start = c;
    if (blend > 0.0) {
      const Vector g = c.g / c.g.sum();
      start.q = (1.0 - blend) * c.q + blend * a * g.transpose();
      start.r = (1.0 - blend) * c.r + blend * b * g.transpose();
      start.g = (1.0 - blend) * c.g + blend * g;
      Charge(ops, 3 * (c.q.size() + c.r.size()));
    }
    InnerResult inner = InnerProjection(MdKernels{std::move(start.q), std::move(start.r), std::move(start.g)}, a,
                                        b, cfg, ops);
    if (inner.converged) return std::move(inner.coupling);
    residual = inner.residual;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", residual);
  throw Error(ErrorKind::kInnerNoConvergence, std::string("feasibility repair stalled at residual ") + buf);
}


LowRankCoupling InitRandom(const Vector& a, const Vector& b, Index rank, std::uint64_t seed,
                           const SolverConfig& cfg, OpCounter* ops) {
  CheckRank(rank, a.size(), b.size());
  std::mt19937_64 rng(seed);
  LowRankCoupling c;
  c.q = detail::PositiveGaussian(a.size(), rank, rng);
  c.r = detail::PositiveGaussian(b.size(), rank, rng);
  c.g = detail::PositiveGaussian(rank, 1, rng).col(0);
  Charge(ops, 2 * (c.q.size() + c.r.size() + c.g.size()));
  return RepairCoupling(std::move(c), a, b, cfg, ops);
}

namespace {

Vector ArangeSimplex(Index n) {
  Vector v = Vector::LinSpaced(n, 1.0, static_cast<double>(n));
  return v / v.sum();
}

Matrix Rank2Factor(const Vector& marginal, const Vector& g, double lambda) {
  const Vector aux_marginal = ArangeSimplex(marginal.size());
  const Vector aux_g = ArangeSimplex(g.size());
  const Vector left = (marginal - lambda * aux_marginal) / (1.0 - lambda);
  const Vector right = (g - lambda * aux_g) / (1.0 - lambda);
  return lambda * aux_marginal * aux_g.transpose() + (1.0 - lambda) * left * right.transpose();
}

}  // namespace

LowRankCoupling InitRank2(const Vector& a, const Vector& b, Index rank, const SolverConfig& cfg,
                          OpCounter* ops) {
  if (rank < 2) throw Error(ErrorKind::kRankTooSmall, "rank-2 initialization needs rank >= 2");
  CheckRank(rank, a.size(), b.size());
  const double inv_r = 1.0 / static_cast<double>(rank);
  const double lambda = 0.5 * std::min({a.minCoeff(), b.minCoeff(), inv_r});
  LowRankCoupling c;
  c.g = Vector::Constant(rank, inv_r);
  c.q = Rank2Factor(a, c.g, lambda);
  c.r = Rank2Factor(b, c.g, lambda);
  Charge(ops, 4 * (c.q.size() + c.r.size()));
  const bool clamped = (c.q.array() < 0.0).any() || (c.r.array() < 0.0).any();
  if (clamped) {
    c.q = c.q.cwiseMax(0.0);
    c.r = c.r.cwiseMax(0.0);
  }
  if (clamped || MarginalResidual(c, a, b) > cfg.inner_tol) {
    c.q = c.q.cwiseMax(cfg.kernel_floor);
    c.r = c.r.cwiseMax(cfg.kernel_floor);
    return RepairCoupling(std::move(c), a, b, cfg, ops);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Lloyd

namespace {

Index SampleIndex(const Vector& mass, std::mt19937_64& rng) {
  const double total = mass.sum();
  std::uniform_real_distribution<double> unif(0.0, total);
  const double u = unif(rng);
  double acc = 0.0;
  for (Index i = 0; i < mass.size(); ++i) {
    acc += mass[i];
    if (u < acc && mass[i] > 0.0) return i;
  }
  for (Index i = mass.size() - 1; i >= 0; --i) {
    if (mass[i] > 0.0) return i;
  }
  return 0;
}

Vector NearestSqDist(const Matrix& points, const Matrix& centroids, Index count, std::vector<int>* labels) {
  const Index n = points.rows();
  Vector best = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < count; ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best[i]) {
        best[i] = d;
        if (labels != nullptr) (*labels)[i] = static_cast<int>(c);
      }
    }
  }
  return best;
}

}  // namespace

KMeansResult LloydKMeans(const Matrix& points, const Vector& weights, Index k, std::uint64_t seed,
                         int max_iters, OpCounter* ops) {
  const Index n = points.rows();
  const Index d = points.cols();
  if (weights.size() != n) throw Error(ErrorKind::kDimensionMismatch, "weights do not match points");
  if (k < 1 || k > n) throw Error(ErrorKind::kInvalidArgument, "k must lie in [1, n]");

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centroids.resize(k, d);
  std::vector<bool> chosen(n, false);

  // k-means++ seeding, mass proportional to w * D^2.
  Index first = SampleIndex(weights, rng);
  res.centroids.row(0) = points.row(first);
  chosen[first] = true;
  for (Index c = 1; c < k; ++c) {
    Vector mass = weights.cwiseProduct(NearestSqDist(points, res.centroids, c, nullptr));
    for (Index i = 0; i < n; ++i) {
      if (chosen[i]) mass[i] = 0.0;
    }
    if (!(mass.sum() > 0.0)) {
      // All remaining points coincide with centroids; take unused indices.
      for (Index i = 0; i < n; ++i) mass[i] = chosen[i] ? 0.0 : 1.0;
    }
    const Index pick = SampleIndex(mass, rng);
    res.centroids.row(c) = points.row(pick);
    chosen[pick] = true;
  }
  Charge(ops, 3 * n * d * k);

  res.labels.assign(n, 0);
  std::vector<int> previous;
  for (int it = 0; it < max_iters; ++it) {
    Vector dist = NearestSqDist(points, res.centroids, k, &res.labels);
    Charge(ops, 3 * n * d * k);
    res.iterations = it + 1;
    if (res.labels == previous) break;
    previous = res.labels;

    Matrix sums = Matrix::Zero(k, d);
    Vector mass = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(res.labels[i]) += weights[i] * points.row(i);
      mass[res.labels[i]] += weights[i];
    }
    Charge(ops, 2 * n * d);
    for (Index c = 0; c < k; ++c) {
      if (mass[c] > 0.0) {
        res.centroids.row(c) = sums.row(c) / mass[c];
        continue;
      }
      // Empty cluster: move it onto the worst-served point.
      Index far = 0;
      dist.maxCoeff(&far);
      res.centroids.row(c) = points.row(far);
      dist[far] = 0.0;
      previous.clear();
    }
  }
  const Vector dist = NearestSqDist(points, res.centroids, k, &res.labels);
  res.objective = weights.dot(dist);
  return res;
}

KMeansResult LloydKMeansRestarts(const Matrix& points, const Vector& weights, Index k, std::uint64_t seed,
                                 int restarts, OpCounter* ops) {
  KMeansResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int t = 0; t < std::max(1, restarts); ++t) {
    KMeansResult res = LloydKMeans(points, weights, k, seed + static_cast<std::uint64_t>(t), 100, ops);
    if (res.objective < best.objective) best = std::move(res);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Entropic barycenter initialization

LowRankCoupling InitKMeansBarycenter(const DiscreteMeasure& x, const DiscreteMeasure& y, Index rank,
                                     double epsilon, std::uint64_t seed, const SolverConfig& cfg,
                                     OpCounter* ops, bool* converged) {
  if (!x.has_points() || !y.has_points()) {
    throw Error(ErrorKind::kInvalidArgument, "k-means initialization needs Euclidean support points");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorKind::kInvalidArgument, "epsilon must be positive");
  const Vector& a = x.weights();
  const Vector& b = y.weights();
  CheckRank(rank, a.size(), b.size());

  const DiscreteMeasure& source = y.size() > x.size() ? y : x;
  const KMeansResult km = LloydKMeansRestarts(source.points(), source.weights(), rank, seed, 10, ops);

  const Matrix log_kq = -SqEuclideanDense(x.points(), km.centroids) / epsilon;
  const Matrix log_kr = -SqEuclideanDense(y.points(), km.centroids) / epsilon;
  Charge(ops, 3 * (log_kq.size() + log_kr.size()) * x.dim());

  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();
  Vector hq = Vector::Zero(rank);
  Vector hr = Vector::Zero(rank);
  LowRankCoupling best;
  double best_residual = std::numeric_limits<double>::infinity();
  constexpr int kMaxRounds = 5000;

  for (int round = 0; round < kMaxRounds; ++round) {
    // Row marginals.
    const Vector fq = log_a - detail::RowLogSumExp(log_kq.rowwise() + hq.transpose());
    const Vector fr = log_b - detail::RowLogSumExp(log_kr.rowwise() + hr.transpose());
    // Shared column marginal: geometric mean of the two current marginals.
    const Matrix lq = (log_kq.rowwise() + hq.transpose()).colwise() + fq;
    const Matrix lr = (log_kr.rowwise() + hr.transpose()).colwise() + fr;
    const Vector log_pq = detail::ColLogSumExp(lq);
    const Vector log_pr = detail::ColLogSumExp(lr);
    const Vector log_p = 0.5 * (log_pq + log_pr);
    hq += log_p - log_pq;
    hr += log_p - log_pr;
    Charge(ops, 8 * (log_kq.size() + log_kr.size()));

    LowRankCoupling c;
    c.q = ((log_kq.rowwise() + hq.transpose()).colwise() + fq).array().exp();
    c.r = ((log_kr.rowwise() + hr.transpose()).colwise() + fr).array().exp();
    c.g = c.q.colwise().sum().transpose();
    Charge(ops, 2 * (c.q.size() + c.r.size()));
    if ((c.g.array() < cfg.g_floor).any()) {
      c.g = c.g.cwiseMax(cfg.g_floor);
    }
    const double residual = MarginalResidual(c, a, b);
    if (residual < best_residual) {
      best_residual = residual;
      best = std::move(c);
    }
    if (best_residual <= cfg.inner_tol) break;
  }
  if (converged != nullptr) *converged = best_residual <= cfg.inner_tol;
  if (best_residual > cfg.inner_tol || !HasValidSigns(best)) {
    best.q = best.q.cwiseMax(cfg.kernel_floor);
    best.r = best.r.cwiseMax(cfg.kernel_floor);
    return RepairCoupling(std::move(best), a, b, cfg, ops);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Generalized k-means initialization

LowRankCoupling InitGeneralizedKMeans(const CostMatrix& cxx, const Vector& a, const CostMatrix& cyy,
                                      const Vector& b, Index rank, const SolverConfig& cfg, OpCounter* ops) {
  CheckRank(rank, a.size(), b.size());
  ClusterOptions opts;
  opts.solver = cfg;
  // Each side contributes two residual terms to the combined check.
  opts.solver.inner_tol = 0.5 * cfg.inner_tol;
  opts.restarts = 1;
  opts.fixed_g = Vector::Constant(rank, 1.0 / static_cast<double>(rank));

  ClusterResult qx = LotCluster(cxx, a, rank, opts, ops);
  opts.solver.seed = cfg.seed + 1;
  ClusterResult qy = LotCluster(cyy, b, rank, opts, ops);

  LowRankCoupling c{std::move(qx.q), std::move(qy.q), *opts.fixed_g};
  if (MarginalResidual(c, a, b) > cfg.inner_tol || !HasValidSigns(c)) {
    c.q = c.q.cwiseMax(cfg.kernel_floor);
    c.r = c.r.cwiseMax(cfg.kernel_floor);
    return RepairCoupling(std::move(c), a, b, cfg, ops);
  }
  return c;
}

LowRankCoupling Initialize(const InitStrategy& strategy, const DiscreteMeasure& x, const DiscreteMeasure& y,
                           Index rank, const SolverConfig& cfg, OpCounter* ops, const CostMatrix* cxx,
                           const CostMatrix* cyy) {
  switch (strategy.kind) {
    case InitKind::kRandom: return InitRandom(x.weights(), y.weights(), rank, cfg.seed, cfg, ops);
    case InitKind::kRank2: return InitRank2(x.weights(), y.weights(), rank, cfg, ops);
    case InitKind::kKMeans:
      return InitKMeansBarycenter(x, y, rank, strategy.epsilon, cfg.seed, cfg, ops);
    case InitKind::kGeneralizedKMeans: {
      if (cxx != nullptr && cyy != nullptr) {
        return InitGeneralizedKMeans(*cxx, x.weights(), *cyy, y.weights(), rank, cfg, ops);
      }
      const CostMatrix own_x = SqEuclideanFactored(x.points(), x.points());
      const CostMatrix own_y = SqEuclideanFactored(y.points(), y.points());
      return InitGeneralizedKMeans(own_x, x.weights(), own_y, y.weights(), rank, cfg, ops);
    }
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown init strategy");
}

}  // namespace lrot
