#pragma once

#include <cstdint>
#include <vector>

#include "lrot/core.hpp"

namespace lrot {

/// Mixes a seed with a stream index (splitmix64), so that sub-experiments get
/// independent generators that do not depend on execution order.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream);

struct GaussianMixture {
  Matrix means;      // components x d
  Matrix variances;  // components x d, diagonal covariances
  Vector weights;    // equal

  Index dim() const { return means.cols(); }
  Index components() const { return means.rows(); }
};

struct MixtureRanges {
  double mean_half_width = 5.0;  // means ~ U[-w, w]^d
  double variance_min = 0.1;
  double variance_max = 2.0;
};

GaussianMixture MakeGaussianMixture(Index d, std::uint64_t seed, Index components = 10,
                                    const MixtureRanges& ranges = {});

/// n draws, one per row. Component labels are written to `labels` if given.
Matrix SampleMixture(const GaussianMixture& mixture, Index n, std::uint64_t seed,
                     std::vector<int>* labels = nullptr);

/// Ten-component anisotropic mixture with parameters and draws both derived
/// from `seed`.
Matrix SampleGaussianMixture(Index d, Index n, std::uint64_t seed);

/// Two interleaving half circles in the plane (outer moon first), with
/// isotropic Gaussian noise.
Matrix TwoMoons(Index n, double noise, std::uint64_t seed, std::vector<int>* labels = nullptr);

/// Isotropic blobs of (nearly) equal size around the rows of `centers`.
Matrix Blobs(Index n, const Matrix& centers, double stddev, std::uint64_t seed,
             std::vector<int>* labels = nullptr);

/// n draws from N(mean, stddev^2 I).
Matrix GaussianCloud(Index n, const Vector& mean, double stddev, std::uint64_t seed);

}  // namespace lrot
