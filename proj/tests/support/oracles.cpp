#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

Matrix PairwiseSqDist(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows(), y.rows());
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < y.rows(); ++j) {
      double s = 0.0;
      for (int k = 0; k < x.cols(); ++k) s += (x(i, k) - y(j, k)) * (x(i, k) - y(j, k));
      out(i, j) = s;
    }
  }
  return out;
}

double BruteForceAssignmentOt(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n != cost.cols()) throw std::invalid_argument("assignment oracle needs a square cost");
  if (n > 8) throw std::length_error("assignment oracle is capped at n = 8");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

double MonotoneOt1d(const Vector& x, const Vector& a, const Vector& y, const Vector& b,
                    const std::function<double(double)>& cost_of_difference) {
  std::vector<int> ix(x.size());
  std::vector<int> iy(y.size());
  std::iota(ix.begin(), ix.end(), 0);
  std::iota(iy.begin(), iy.end(), 0);
  std::sort(ix.begin(), ix.end(), [&](int l, int r) { return x[l] < x[r]; });
  std::sort(iy.begin(), iy.end(), [&](int l, int r) { return y[l] < y[r]; });
  std::size_t i = 0;
  std::size_t j = 0;
  double ra = a[ix[0]];
  double rb = b[iy[0]];
  double total = 0.0;
  while (i < ix.size() && j < iy.size()) {
    const double mass = std::min(ra, rb);
    total += mass * cost_of_difference(x[ix[i]] - y[iy[j]]);
    ra -= mass;
    rb -= mass;
    if (ra <= 1e-15 && i + 1 < ix.size()) {
      ra = a[ix[++i]];
    } else if (ra <= 1e-15) {
      ++i;
    }
    if (rb <= 1e-15 && j + 1 < iy.size()) {
      rb = b[iy[++j]];
    } else if (rb <= 1e-15) {
      ++j;
    }
  }
  return total;
}

namespace {

struct Layout {
  int n, m, r;
  int qi(int i, int k) const { return i * r + k; }
  int ri(int j, int k) const { return n * r + j * r + k; }
  int gi(int k) const { return n * r + m * r + k; }
  int size() const { return (n + m + 1) * r; }
};

}  // namespace

KlTriple NumericalKlProjection(const Matrix& xi1, const Matrix& xi2, const Vector& xi3, const Vector& a,
                               const Vector& b, KlSet set) {
  const Layout L{static_cast<int>(xi1.rows()), static_cast<int>(xi2.rows()), static_cast<int>(xi1.cols())};
  if (L.size() > 64) throw std::length_error("KL oracle is capped at 64 variables");
  Vector xi(L.size());
  for (int i = 0; i < L.n; ++i)
    for (int k = 0; k < L.r; ++k) xi[L.qi(i, k)] = xi1(i, k);
  for (int j = 0; j < L.m; ++j)
    for (int k = 0; k < L.r; ++k) xi[L.ri(j, k)] = xi2(j, k);
  for (int k = 0; k < L.r; ++k) xi[L.gi(k)] = xi3[k];

  std::vector<Vector> rows;
  std::vector<double> rhs;
  if (set != KlSet::kColumns) {
    for (int i = 0; i < L.n; ++i) {
      Vector row = Vector::Zero(L.size());
      for (int k = 0; k < L.r; ++k) row[L.qi(i, k)] = 1.0;
      rows.push_back(row);
      rhs.push_back(a[i]);
    }
    for (int j = 0; j < L.m; ++j) {
      Vector row = Vector::Zero(L.size());
      for (int k = 0; k < L.r; ++k) row[L.ri(j, k)] = 1.0;
      rows.push_back(row);
      rhs.push_back(b[j]);
    }
  }
  if (set != KlSet::kRows) {
    for (int k = 0; k < L.r; ++k) {
      Vector rq = Vector::Zero(L.size());
      Vector rr = Vector::Zero(L.size());
      for (int i = 0; i < L.n; ++i) rq[L.qi(i, k)] = 1.0;
      for (int j = 0; j < L.m; ++j) rr[L.ri(j, k)] = 1.0;
      rq[L.gi(k)] = -1.0;
      rr[L.gi(k)] = -1.0;
      rows.push_back(rq);
      rows.push_back(rr);
      rhs.push_back(0.0);
      rhs.push_back(0.0);
    }
  }
  Matrix A(rows.size(), L.size());
  Vector c(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A.row(static_cast<int>(i)) = rows[i].transpose();
    c[static_cast<int>(i)] = rhs[i];
  }

  // Dual: phi(lambda) = sum xi exp(-A^T lambda) + lambda^T c, convex.
  auto primal = [&](const Vector& lam) -> Vector {
    return (xi.array() * (-(A.transpose() * lam)).array().exp()).matrix();
  };
  auto phi = [&](const Vector& lam) { return primal(lam).sum() + lam.dot(c); };
  Vector lam = Vector::Zero(A.rows());
  bool done = false;
  for (int it = 0; it < 500; ++it) {
    const Vector z = primal(lam);
    const Vector grad = c - A * z;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-14) {
      done = true;
      break;
    }
    const Matrix H = A * z.asDiagonal() * A.transpose();
    // Redundant constraints make H singular; the minimum-norm step is fine.
    const Vector step = H.completeOrthogonalDecomposition().solve(-grad);
    double t = 1.0;
    const double f0 = phi(lam);
    const double slope = grad.dot(step);
    while (t > 1e-12 && phi(lam + t * step) > f0 + 1e-4 * t * slope) t *= 0.5;
    lam += t * step;
  }
  if (!done) {
    const Vector z = primal(lam);
    if ((c - A * z).lpNorm<Eigen::Infinity>() > 1e-10) throw std::runtime_error("KL oracle did not converge");
  }
  const Vector z = primal(lam);
  KlTriple out{Matrix(L.n, L.r), Matrix(L.m, L.r), Vector(L.r)};
  for (int i = 0; i < L.n; ++i)
    for (int k = 0; k < L.r; ++k) out.q(i, k) = z[L.qi(i, k)];
  for (int j = 0; j < L.m; ++j)
    for (int k = 0; k < L.r; ++k) out.r(j, k) = z[L.ri(j, k)];
  for (int k = 0; k < L.r; ++k) out.g[k] = z[L.gi(k)];
  return out;
}

double KlObjective(const KlTriple& z, const Matrix& xi1, const Matrix& xi2, const Vector& xi3) {
  auto kl = [](double p, double q) { return p * std::log(p / q) - p + q; };
  double s = 0.0;
  for (int i = 0; i < z.q.size(); ++i) s += kl(z.q.data()[i], xi1.data()[i]);
  for (int i = 0; i < z.r.size(); ++i) s += kl(z.r.data()[i], xi2.data()[i]);
  for (int i = 0; i < z.g.size(); ++i) s += kl(z.g[i], xi3[i]);
  return s;
}

DenseKernels DenseKernelFormulas(const Matrix& cost, const Matrix& q, const Matrix& r, const Vector& g,
                                 double gamma) {
  const int n = static_cast<int>(q.rows());
  const int m = static_cast<int>(r.rows());
  const int k = static_cast<int>(g.size());
  DenseKernels d{Matrix::Zero(n, k), Matrix::Zero(m, k), Vector::Zero(k), Matrix(n, k), Matrix(m, k), Vector(k)};
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < k; ++l) {
      for (int j = 0; j < m; ++j) d.grad_q(i, l) += cost(i, j) * r(j, l);
      d.grad_q(i, l) /= g[l];
    }
  for (int j = 0; j < m; ++j)
    for (int l = 0; l < k; ++l) {
      for (int i = 0; i < n; ++i) d.grad_r(j, l) += cost(i, j) * q(i, l);
      d.grad_r(j, l) /= g[l];
    }
  for (int l = 0; l < k; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) d.omega[l] += q(i, l) * cost(i, j) * r(j, l);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < k; ++l) d.xi1(i, l) = q(i, l) * std::exp(-gamma * d.grad_q(i, l));
  for (int j = 0; j < m; ++j)
    for (int l = 0; l < k; ++l) d.xi2(j, l) = r(j, l) * std::exp(-gamma * d.grad_r(j, l));
  for (int l = 0; l < k; ++l) d.xi3[l] = g[l] * std::exp(gamma * d.omega[l] / (g[l] * g[l]));
  return d;
}

Vector CentralDifference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector out(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Vector hi = x;
    Vector lo = x;
    hi[i] += h;
    lo[i] -= h;
    out[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return out;
}

Matrix FloydWarshall(const Matrix& w) {
  Matrix d = w;
  const int n = static_cast<int>(w.rows());
  for (int i = 0; i < n; ++i) d(i, i) = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

namespace {

void Explore(const Matrix& w, int node, double length, std::vector<bool>& seen, Vector& best) {
  best[node] = std::min(best[node], length);
  for (int next = 0; next < w.rows(); ++next) {
    if (seen[next]) continue;
    seen[next] = true;
    Explore(w, next, length + w(node, next), seen, best);
    seen[next] = false;
  }
}

template <typename Fn>
void ForEachLabeling(int n, int k, Fn&& fn) {
  std::vector<int> labels(n, 0);
  while (true) {
    fn(labels);
    int pos = 0;
    while (pos < n && ++labels[pos] == k) labels[pos++] = 0;
    if (pos == n) return;
  }
}

}  // namespace

Matrix AllSimplePathsShortest(const Matrix& w) {
  const int n = static_cast<int>(w.rows());
  if (n > 7) throw std::length_error("path enumeration is capped at n = 7");
  Matrix out(n, n);
  for (int s = 0; s < n; ++s) {
    Vector best = Vector::Constant(n, std::numeric_limits<double>::infinity());
    std::vector<bool> seen(n, false);
    seen[s] = true;
    Explore(w, s, 0.0, seen, best);
    out.row(s) = best.transpose();
  }
  return out;
}

double BruteForceKMeans(const Matrix& points, int k) {
  const int n = static_cast<int>(points.rows());
  if (std::pow(k, n) > 2e6) throw std::length_error("k-means enumeration too large");
  double best = std::numeric_limits<double>::infinity();
  ForEachLabeling(n, k, [&](const std::vector<int>& labels) {
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += points.row(i);
      ++counts[labels[i]];
    }
    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) return;
    double obj = 0.0;
    for (int i = 0; i < n; ++i) {
      obj += (points.row(i) - sums.row(labels[i]) / counts[labels[i]]).squaredNorm();
    }
    best = std::min(best, obj);
  });
  return best;
}

double BruteForceHardCluster(const Matrix& cost, const Vector& a, int k) {
  const int n = static_cast<int>(cost.rows());
  if (std::pow(k, n) > 2e6) throw std::length_error("cluster enumeration too large");
  double best = std::numeric_limits<double>::infinity();
  ForEachLabeling(n, k, [&](const std::vector<int>& labels) {
    std::vector<double> mass(k, 0.0);
    for (int i = 0; i < n; ++i) mass[labels[i]] += a[i];
    double obj = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (labels[i] == labels[j]) obj += a[i] * a[j] * cost(i, j) / mass[labels[i]];
    best = std::min(best, obj);
  });
  return best;
}

double PairCountingAri(const std::vector<int>& u, const std::vector<int>& v) {
  double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      const bool same_u = u[i] == u[j];
      const bool same_v = v[i] == v[j];
      if (same_u && same_v) {
        ++n11;
      } else if (same_u) {
        ++n10;
      } else if (same_v) {
        ++n01;
      } else {
        ++n00;
      }
    }
  }
  const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
  if (den == 0.0) return 1.0;
  return 2.0 * (n00 * n11 - n01 * n10) / den;
}

}  // namespace oracle
