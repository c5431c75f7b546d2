#include "lrot/datasets.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lrot {

std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

GaussianMixture MakeGaussianMixture(Index d, std::uint64_t seed, Index components, const MixtureRanges& ranges) {
  if (d < 1) throw Error(ErrorKind::kInvalidArgument, "dimension must be >= 1");
  if (components < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one component");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mean(-ranges.mean_half_width, ranges.mean_half_width);
  std::uniform_real_distribution<double> var(ranges.variance_min, ranges.variance_max);
  GaussianMixture mix;
  mix.means.resize(components, d);
  mix.variances.resize(components, d);
  for (Index c = 0; c < components; ++c) {
    for (Index j = 0; j < d; ++j) mix.means(c, j) = mean(rng);
    for (Index j = 0; j < d; ++j) mix.variances(c, j) = var(rng);
  }
  mix.weights = Vector::Constant(components, 1.0 / static_cast<double>(components));
  return mix;
}

Matrix SampleMixture(const GaussianMixture& mixture, Index n, std::uint64_t seed, std::vector<int>* labels) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(mixture.weights.data(), mixture.weights.data() + mixture.weights.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = mixture.dim();
  Matrix out(n, d);
  if (labels != nullptr) labels->assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    const int c = pick(rng);
    if (labels != nullptr) (*labels)[i] = c;
    for (Index j = 0; j < d; ++j) {
      out(i, j) = mixture.means(c, j) + std::sqrt(mixture.variances(c, j)) * normal(rng);
    }
  }
  return out;
}

Matrix SampleGaussianMixture(Index d, Index n, std::uint64_t seed) {
  return SampleMixture(MakeGaussianMixture(d, DeriveSeed(seed, 0)), n, DeriveSeed(seed, 1));
}

Matrix TwoMoons(Index n, double noise, std::uint64_t seed, std::vector<int>* labels) {
  const Index n_outer = n - n / 2;
  const Index n_inner = n / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, 2);
  if (labels != nullptr) labels->assign(n, 0);
  const double pi = std::numbers::pi;
  for (Index i = 0; i < n_outer; ++i) {
    const double t = n_outer > 1 ? pi * static_cast<double>(i) / static_cast<double>(n_outer - 1) : 0.0;
    out(i, 0) = std::cos(t);
    out(i, 1) = std::sin(t);
  }
  for (Index i = 0; i < n_inner; ++i) {
    const double t = n_inner > 1 ? pi * static_cast<double>(i) / static_cast<double>(n_inner - 1) : 0.0;
    out(n_outer + i, 0) = 1.0 - std::cos(t);
    out(n_outer + i, 1) = 0.5 - std::sin(t);
    if (labels != nullptr) (*labels)[n_outer + i] = 1;
  }
  for (Index i = 0; i < n; ++i) {
    out(i, 0) += noise * normal(rng);
    out(i, 1) += noise * normal(rng);
  }
  return out;
}

Matrix Blobs(Index n, const Matrix& centers, double stddev, std::uint64_t seed, std::vector<int>* labels) {
  const Index k = centers.rows();
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one center");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, centers.cols());
  if (labels != nullptr) labels->assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    const Index c = i * k / n;
    if (labels != nullptr) (*labels)[i] = static_cast<int>(c);
    for (Index j = 0; j < centers.cols(); ++j) out(i, j) = centers(c, j) + stddev * normal(rng);
  }
  return out;
}

Matrix GaussianCloud(Index n, const Vector& mean, double stddev, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(n, mean.size());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < mean.size(); ++j) out(i, j) = mean[j] + stddev * normal(rng);
  }
  return out;
}

}  // namespace lrot
