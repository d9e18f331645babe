#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fpclust/error.hpp"
#include "fpclust/fpca.hpp"
#include "fpclust/rng.hpp"

namespace fpclust {

/// Labels are 1-based cluster ids in {1..k}. The indicator matrix X has
/// X(i, j) = 1/sqrt(s_j) when point i is in cluster j.
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  double objective = 0.0;
  Eigen::MatrixXd indicator;
  std::vector<int> cluster_sizes;
};

struct RestartInfo {
  int iterations = 0;
  double objective = 0.0;
  std::vector<double> trace;  // objective after each Lloyd iteration
};

struct KmeansConfig {
  int k = 2;
  int restarts = 20;
  int max_iters = 300;
  double tol = 1e-9;
  std::uint64_t seed = 0;

  void validate() const {
    require(k >= 1, ErrorKind::InvalidConfig, "kmeans k must be >= 1");
    require(restarts >= 1, ErrorKind::InvalidConfig, "kmeans restarts must be >= 1");
    require(max_iters >= 1, ErrorKind::InvalidConfig, "kmeans max_iters must be >= 1");
    require(tol >= 0.0, ErrorKind::InvalidConfig, "kmeans tol must be >= 0");
  }
};

struct KmeansResult {
  ClusterAssignment assignment;
  std::vector<RestartInfo> restarts;
  int best_restart = 0;
};

/// Gaussian-kernel bandwidth; nullopt selects the median pairwise distance.
/// `seed` drives the embedding k-means (overrides inner.seed).
struct SpectralConfig {
  int k = 2;
  std::optional<double> sigma;
  std::uint64_t seed = 0;
  KmeansConfig inner;

  void validate() const {
    require(k >= 2, ErrorKind::InvalidConfig, "spectral k must be >= 2");
    require(!sigma || *sigma > 0.0, ErrorKind::InvalidConfig, "spectral sigma must be > 0");
  }
};

struct SpectralResult {
  ClusterAssignment assignment;
  double sigma = 0.0;
  Eigen::VectorXd eigenvalues;  // k smallest of L_sym
  KmeansResult embedding_kmeans;
};

/// Eq. 15: sum of squared distances of each row to its cluster mean.
inline double objective_sumsq(const Eigen::Ref<const Eigen::MatrixXd>& A, const std::vector<int>& labels, int k) {
  require(static_cast<Eigen::Index>(labels.size()) == A.rows(), ErrorKind::ShapeMismatch,
          "label count does not match row count");
  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, A.cols());
  std::vector<int> sizes(k, 0);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const int c = labels[i] - 1;
    require(c >= 0 && c < k, ErrorKind::InvalidArg, "label out of range");
    centroids.row(c) += A.row(i);
    ++sizes[c];
  }
  for (int c = 0; c < k; ++c)
    if (sizes[c] > 0) centroids.row(c) /= sizes[c];
  double total = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) total += (A.row(i) - centroids.row(labels[i] - 1)).squaredNorm();
  return total;
}

inline Eigen::MatrixXd indicator_matrix(const std::vector<int>& labels, int k) {
  std::vector<int> sizes(k, 0);
  for (int l : labels) {
    require(l >= 1 && l <= k, ErrorKind::InvalidArg, "label out of range");
    ++sizes[l - 1];
  }
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i)
    X(static_cast<Eigen::Index>(i), labels[i] - 1) = 1.0 / std::sqrt(static_cast<double>(sizes[labels[i] - 1]));
  return X;
}

/// Builds a complete assignment (sizes, indicator, Eq. 15 objective) from labels.
inline ClusterAssignment make_assignment(const Eigen::Ref<const Eigen::MatrixXd>& A, std::vector<int> labels, int k) {
  ClusterAssignment out;
  out.k = k;
  out.cluster_sizes.assign(k, 0);
  for (int l : labels) {
    require(l >= 1 && l <= k, ErrorKind::InvalidArg, "label out of range");
    ++out.cluster_sizes[l - 1];
  }
  out.objective = objective_sumsq(A, labels, k);
  out.indicator = indicator_matrix(labels, k);
  out.labels = std::move(labels);
  require(std::isfinite(out.objective), ErrorKind::NumericalFailure, "non-finite objective");
  return out;
}

/// Eq. 16: ||A - X X^T A||_F^2 with X built from the assignment's labels.
inline double objective_frobenius(const Eigen::Ref<const Eigen::MatrixXd>& A, const ClusterAssignment& assignment) {
  require(static_cast<Eigen::Index>(assignment.labels.size()) == A.rows(), ErrorKind::ShapeMismatch,
          "assignment has " + std::to_string(assignment.labels.size()) + " labels for " + std::to_string(A.rows()) +
              " rows");
  const Eigen::MatrixXd X = indicator_matrix(assignment.labels, assignment.k);
  return (A - X * (X.transpose() * A)).squaredNorm();
}

namespace detail {

inline int nearest_centroid(const Eigen::Ref<const Eigen::MatrixXd>& A, Eigen::Index i, const Eigen::MatrixXd& C,
                            double& dist) {
  int best = 0;
  dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < C.rows(); ++c) {
    const double d = (A.row(i) - C.row(c)).squaredNorm();
    if (d < dist) {
      dist = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

inline Eigen::MatrixXd kmeanspp_seed(const Eigen::Ref<const Eigen::MatrixXd>& A, int k, Stream& rng) {
  const Eigen::Index m = A.rows();
  Eigen::MatrixXd C(k, A.cols());
  C.row(0) = A.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m))));
  Eigen::VectorXd d2(m);
  for (Eigen::Index i = 0; i < m; ++i) d2(i) = (A.row(i) - C.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (Eigen::Index i = 0; i < m; ++i) {
        acc += d2(i);
        if (u < acc && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
    }
    C.row(c) = A.row(pick);
    for (Eigen::Index i = 0; i < m; ++i) d2(i) = std::min(d2(i), (A.row(i) - C.row(c)).squaredNorm());
  }
  return C;
}

// One Lloyd run from k-means++ seeding. Labels are 0-based here.
inline RestartInfo lloyd_run(const Eigen::Ref<const Eigen::MatrixXd>& A, const KmeansConfig& cfg, Stream rng,
                             std::vector<int>& labels) {
  const Eigen::Index m = A.rows();
  const int k = cfg.k;
  Eigen::MatrixXd C = kmeanspp_seed(A, k, rng);
  labels.assign(m, 0);
  std::vector<double> dist(m, 0.0);
  RestartInfo info;
  double prev = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (Eigen::Index i = 0; i < m; ++i) labels[i] = nearest_centroid(A, i, C, dist[i]);

    std::vector<int> sizes(k, 0);
    for (int l : labels) ++sizes[l];
    // Repair empty clusters with the point farthest from its centroid,
    // taken from a cluster that can spare it.
    for (int c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < m; ++i)
        if (sizes[labels[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      require(far >= 0, ErrorKind::NumericalFailure, "cannot repair empty cluster");
      --sizes[labels[far]];
      labels[far] = c;
      ++sizes[c];
      dist[far] = 0.0;
    }

    C.setZero();
    for (Eigen::Index i = 0; i < m; ++i) C.row(labels[i]) += A.row(i);
    for (int c = 0; c < k; ++c) C.row(c) /= sizes[c];

    double obj = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) obj += (A.row(i) - C.row(labels[i])).squaredNorm();
    require(std::isfinite(obj), ErrorKind::NumericalFailure, "non-finite k-means objective");
    info.trace.push_back(obj);
    info.iterations = iter + 1;
    info.objective = obj;
    const bool converged = std::isfinite(prev) && (prev - obj) <= cfg.tol * std::max(prev, 1e-300);
    prev = obj;
    if (converged) break;
  }
  return info;
}

}  // namespace detail

/// Best of `restarts` k-means++ / Lloyd runs. Restart r draws from
/// Stream(seed, r); ties on objective go to the lowest restart index.
inline KmeansResult kmeans_detailed(const Eigen::Ref<const Eigen::MatrixXd>& A, const KmeansConfig& config) {
  config.validate();
  require(A.rows() >= 1 && A.cols() >= 1, ErrorKind::InvalidArg, "empty feature matrix");
  require(config.k <= A.rows(), ErrorKind::InvalidArg,
          "k=" + std::to_string(config.k) + " exceeds sample count " + std::to_string(A.rows()));
  require(A.allFinite(), ErrorKind::NumericalFailure, "non-finite features");

  KmeansResult result;
  std::vector<int> best_labels;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> labels;
  for (int r = 0; r < config.restarts; ++r) {
    RestartInfo info = detail::lloyd_run(A, config, Stream(config.seed, static_cast<std::uint64_t>(r)), labels);
    if (info.objective < best_obj) {
      best_obj = info.objective;
      best_labels = labels;
      result.best_restart = r;
    }
    result.restarts.push_back(std::move(info));
  }
  for (int& l : best_labels) ++l;
  result.assignment = make_assignment(A, std::move(best_labels), config.k);
  return result;
}

inline ClusterAssignment kmeans(const Eigen::Ref<const Eigen::MatrixXd>& A, const KmeansConfig& config) {
  return kmeans_detailed(A, config).assignment;
}

/// Exact k-means optimum by enumerating every partition of the rows into
/// exactly k non-empty blocks (restricted growth strings).
inline ClusterAssignment exhaustive_kmeans(const Eigen::Ref<const Eigen::MatrixXd>& A, int k,
                                           Eigen::Index max_rows = 12) {
  const Eigen::Index m = A.rows();
  require(m <= max_rows, ErrorKind::TooLarge,
          "exhaustive k-means limited to " + std::to_string(max_rows) + " rows (got " + std::to_string(m) + ")");
  require(k >= 1 && k <= m, ErrorKind::InvalidArg, "k out of range for exhaustive search");

  std::vector<int> rgs(m, 0), prefix_max(m, 0), best;
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> labels(m);
  // Depth-first over restricted growth strings: rgs[i] <= max(rgs[0..i-1]) + 1.
  auto visit = [&](auto&& self, Eigen::Index i, int used) -> void {
    if (used + (m - i) < k) return;
    if (i == m) {
      if (used != k) return;
      for (Eigen::Index j = 0; j < m; ++j) labels[j] = rgs[j] + 1;
      const double obj = objective_sumsq(A, labels, k);
      if (obj < best_obj) {
        best_obj = obj;
        best = labels;
      }
      return;
    }
    for (int c = 0; c <= std::min(used, k - 1); ++c) {
      rgs[i] = c;
      self(self, i + 1, std::max(used, c + 1));
    }
  };
  visit(visit, 0, 0);
  return make_assignment(A, std::move(best), k);
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Gaussian affinity with zero diagonal: W_ij = exp(-||a_i - a_j||^2 / (2 sigma^2)).
inline Eigen::MatrixXd gaussian_affinity(const Eigen::Ref<const Eigen::MatrixXd>& A, double sigma) {
  const Eigen::Index m = A.rows();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double w = std::exp(-(A.row(i) - A.row(j)).squaredNorm() / (2.0 * sigma * sigma));
      W(i, j) = w;
      W(j, i) = w;
    }
  return W;
}

inline double median_pairwise_distance(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  std::vector<double> d;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = i + 1; j < A.rows(); ++j) {
      const double dist = (A.row(i) - A.row(j)).norm();
      if (dist > 0.0) d.push_back(dist);
    }
  require(!d.empty(), ErrorKind::DegenerateAffinity, "all pairwise distances are zero");
  return detail::median(std::move(d));
}

/// Normalized spectral clustering on L_sym = I - D^-1/2 W D^-1/2. The
/// reported objective is Eq. 15 on the original features.
inline SpectralResult spectral_detailed(const Eigen::Ref<const Eigen::MatrixXd>& A, const SpectralConfig& config) {
  config.validate();
  const Eigen::Index m = A.rows();
  require(m >= 3, ErrorKind::InvalidArg, "spectral clustering needs at least 3 samples");
  require(config.k <= m, ErrorKind::InvalidArg, "k exceeds sample count");
  require(A.allFinite(), ErrorKind::NumericalFailure, "non-finite features");

  SpectralResult out;
  const double median_d = median_pairwise_distance(A);  // also rejects all-coincident input
  out.sigma = config.sigma ? *config.sigma : median_d;
  const Eigen::MatrixXd W = gaussian_affinity(A, out.sigma);
  const Eigen::VectorXd deg = W.rowwise().sum();
  const Eigen::VectorXd dinv = deg.unaryExpr([](double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; });
  const Eigen::MatrixXd L =
      Eigen::MatrixXd::Identity(m, m) - dinv.asDiagonal() * W * dinv.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L);
  require(eig.info() == Eigen::Success, ErrorKind::NumericalFailure, "Laplacian eigensolver failed");
  Eigen::MatrixXd U = eig.eigenvectors().leftCols(config.k);
  out.eigenvalues = eig.eigenvalues().head(config.k);
  normalize_column_signs(U);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = U.row(i).norm();
    if (n > 0.0) U.row(i) /= n;
  }

  KmeansConfig inner = config.inner;
  inner.k = config.k;
  inner.seed = config.seed;
  out.embedding_kmeans = kmeans_detailed(U, inner);
  out.assignment = make_assignment(A, out.embedding_kmeans.assignment.labels, config.k);
  return out;
}

inline ClusterAssignment spectral(const Eigen::Ref<const Eigen::MatrixXd>& A, const SpectralConfig& config) {
  return spectral_detailed(A, config).assignment;
}

}  // namespace fpclust
