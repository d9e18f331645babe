#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fpclust/basis.hpp"
#include "fpclust/error.hpp"
#include "fpclust/image_io.hpp"
#include "fpclust/rng.hpp"

namespace fpclust {

// Stream ids reserved for the generators, far from the small ids used by
// selection (0, 1) and k-means restarts (0..restarts-1), so a dataset and an
// analysis sharing a seed never share random draws.
inline constexpr std::uint64_t kFeatureNoiseStream = 0x5EED0000'00000001ULL;
inline constexpr std::uint64_t kImageNoiseStream = 0x5EED0000'00000002ULL;

struct PlantedSpec {
  int m = 40;
  int n = 200;
  int k = 2;
  int informative = 4;
  double separation = 20.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(m >= 2 && n >= 1 && k >= 1, ErrorKind::InvalidArg, "planted spec needs m >= 2, n >= 1, k >= 1");
    require(k <= m, ErrorKind::InvalidArg, "planted spec needs k <= m");
    require(informative >= k && informative <= n, ErrorKind::InvalidArg,
            "planted spec needs k <= informative <= n");
    require(separation >= 0.0 && noise_sd >= 0.0, ErrorKind::InvalidArg,
            "separation and noise_sd must be non-negative");
  }
};

/// Orthonormal DCT-II columns (dim x count). Used to embed simplex vertices
/// so every informative coordinate carries signal.
inline Eigen::MatrixXd spread_isometry(int dim, int count) {
  Eigen::MatrixXd Q(dim, count);
  for (int j = 0; j < count; ++j) {
    const double a = j == 0 ? std::sqrt(1.0 / dim) : std::sqrt(2.0 / dim);
    for (int c = 0; c < dim; ++c) Q(c, j) = a * std::cos(std::numbers::pi * (c + 0.5) * j / dim);
  }
  return Q;
}

/// k centroids at scaled standard-simplex vertices (pairwise distance =
/// separation) embedded in a `dim`-dimensional space; one centroid per row.
inline Eigen::MatrixXd simplex_centroids(int k, int dim, double separation) {
  return (spread_isometry(dim, k) * (separation / std::numbers::sqrt2)).transpose();
}

/// Balanced contiguous labels 1..k; the remainder goes to the lowest clusters.
inline std::vector<int> balanced_labels(int m, int k) {
  std::vector<int> labels;
  labels.reserve(m);
  for (int c = 0; c < k; ++c) {
    const int size = m / k + (c < m % k ? 1 : 0);
    labels.insert(labels.end(), size, c + 1);
  }
  return labels;
}

struct PlantedFeatures {
  Eigen::MatrixXd A;
  std::vector<int> labels;
};

/// Samples = centroid (informative coordinates only) + N(0, noise_sd^2) in
/// every coordinate, drawn row by row from Stream(seed, kFeatureNoiseStream).
inline PlantedFeatures planted_features(const PlantedSpec& spec) {
  spec.validate();
  PlantedFeatures out;
  out.labels = balanced_labels(spec.m, spec.k);
  const Eigen::MatrixXd centroids = simplex_centroids(spec.k, spec.informative, spec.separation);
  out.A = Eigen::MatrixXd::Zero(spec.m, spec.n);
  Stream rng(spec.seed, kFeatureNoiseStream);
  for (int i = 0; i < spec.m; ++i) {
    out.A.row(i).head(spec.informative) = centroids.row(out.labels[i] - 1);
    for (int j = 0; j < spec.n; ++j) out.A(i, j) += spec.noise_sd * rng.normal();
  }
  return out;
}

struct ImageSpec {
  int N = 12;
  int height = 32;
  int width = 32;
  int K = 5;
  int groups = 2;
  double separation = 20.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(N >= 2 && groups >= 1 && groups <= N, ErrorKind::InvalidArg, "image spec needs N >= 2, 1 <= groups <= N");
    BasisConfig{K}.validate_for(height, width);
    require(groups <= K * K, ErrorKind::InvalidArg, "groups must not exceed K^2");
    require(separation >= 0.0 && noise_sd >= 0.0, ErrorKind::InvalidArg,
            "separation and noise_sd must be non-negative");
  }
};

struct PlantedImages {
  Dataset dataset;
  std::vector<int> labels;
  Eigen::MatrixXd coefficients;  // pre-rescaling coefficients, N x K^2
  double scale = 1.0;            // pixel = scale * raw + offset, shared by all images
  double offset = 0.0;
};

/// Group structure is planted in coefficient space, synthesized through the
/// basis, then mapped into [0,1] by one affine map common to all images.
inline PlantedImages planted_images(const ImageSpec& spec) {
  spec.validate();
  PlantedImages out;
  out.labels = balanced_labels(spec.N, spec.groups);
  const int D = spec.K * spec.K;
  const Eigen::MatrixXd centroids = simplex_centroids(spec.groups, D, spec.separation);
  out.coefficients.resize(spec.N, D);
  Stream rng(spec.seed, kImageNoiseStream);
  for (int i = 0; i < spec.N; ++i)
    for (int d = 0; d < D; ++d)
      out.coefficients(i, d) = centroids(out.labels[i] - 1, d) + spec.noise_sd * rng.normal();

  const BasisConfig cfg{spec.K};
  std::vector<Eigen::MatrixXd> raw;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < spec.N; ++i) {
    raw.push_back(synthesize_image(out.coefficients.row(i).transpose(), cfg, spec.height, spec.width));
    lo = std::min(lo, raw.back().minCoeff());
    hi = std::max(hi, raw.back().maxCoeff());
  }
  if (hi > lo) {
    out.scale = 1.0 / (hi - lo);
    out.offset = -lo * out.scale;
  } else {
    out.scale = 0.0;
    out.offset = 0.5;
  }
  out.dataset.labels = out.labels;
  for (int i = 0; i < spec.N; ++i) {
    Eigen::MatrixXd px = (raw[i].array() * out.scale + out.offset).cwiseMax(0.0).cwiseMin(1.0).matrix();
    out.dataset.images.push_back(ImageGrid{"img" + std::to_string(i + 1), std::move(px)});
  }
  return out;
}

}  // namespace fpclust
