#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fpclust/clustering.hpp"
#include "fpclust/error.hpp"
#include "fpclust/rng.hpp"

namespace fpclust {

/// Rows are samples, columns are features.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> names;  // optional; empty or one per column

  FeatureMatrix() = default;
  explicit FeatureMatrix(Eigen::MatrixXd v, std::vector<std::string> n = {})
      : values(std::move(v)), names(std::move(n)) {}

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  void validate() const {
    require(values.rows() >= 2, ErrorKind::InvalidArg, "feature matrix needs at least 2 samples");
    require(values.cols() >= 1, ErrorKind::InvalidArg, "feature matrix needs at least 1 feature");
    require(values.allFinite(), ErrorKind::InvalidArg, "feature matrix has non-finite entries");
    require(names.empty() || static_cast<Eigen::Index>(names.size()) == values.cols(), ErrorKind::ShapeMismatch,
            "feature name count does not match column count");
  }
};

/// Everything needed to replay a selection. Indices are 0-based column
/// positions; serialized forms shift them to 1-based.
struct SelectionPlan {
  int k = 0;
  double epsilon = 1.0;
  int r = 0;
  std::uint64_t seed = 0;
  Eigen::VectorXd probabilities;
  std::vector<Eigen::Index> sampled_indices;
  Eigen::VectorXd scale;  // scale_t = 1 / sqrt(r P_{i_t})
};

/// r = k + ceil(k / epsilon) + 1. The quotient is snapped to the nearest
/// integer when within 1e-9 relative so that e.g. epsilon = 1/3 stored as a
/// double still yields ceil(3k) rather than 3k + 1.
inline int selection_size(int k, double epsilon) {
  require(k >= 1, ErrorKind::InvalidArg, "k must be >= 1");
  require(epsilon > 0.0 && epsilon <= 1.0, ErrorKind::InvalidArg, "epsilon must lie in (0, 1]");
  const double q = static_cast<double>(k) / epsilon;
  const double nearest = std::round(q);
  const double c = std::abs(q - nearest) <= 1e-9 * std::max(1.0, q) ? nearest : std::ceil(q);
  return k + static_cast<int>(c) + 1;
}

/// Randomized range finder: Y = A R with R ~ N(0,1)^{n x width} drawn
/// column-major from Stream(seed, 0); Q = pivoted-QR basis of Y dropping
/// columns whose |R_ii| <= 1e-12 ||Y||_F; Z = top-k right singular vectors
/// of Q^T A, each with its largest-magnitude entry positive.
inline Eigen::MatrixXd approx_top_right_singular_vectors(const Eigen::Ref<const Eigen::MatrixXd>& A, int k,
                                                         int sketch_width, std::uint64_t seed) {
  const Eigen::Index m = A.rows(), n = A.cols();
  require(k >= 1 && k <= std::min(m, n), ErrorKind::InvalidArg,
          "k=" + std::to_string(k) + " outside [1, min(m,n)=" + std::to_string(std::min(m, n)) + "]");
  require(sketch_width >= k, ErrorKind::InvalidArg, "sketch width must be >= k");

  Stream rng(seed, 0);
  Eigen::MatrixXd R(n, sketch_width);
  for (Eigen::Index c = 0; c < R.cols(); ++c)
    for (Eigen::Index i = 0; i < n; ++i) R(i, c) = rng.normal();
  const Eigen::MatrixXd Y = A * R;
  const double ynorm = Y.norm();
  require(ynorm > 0.0, ErrorKind::RankTooLow, "sketch of A is zero");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Y);
  const Eigen::MatrixXd& packed = qr.matrixQR();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < std::min(Y.rows(), Y.cols()); ++i)
    if (std::abs(packed(i, i)) > 1e-12 * ynorm) ++rank;
  require(rank >= k, ErrorKind::RankTooLow,
          "sketch has numerical rank " + std::to_string(rank) + " < k=" + std::to_string(k));
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, rank);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q.transpose() * A, Eigen::ComputeThinV);
  require(svd.info() == Eigen::Success, ErrorKind::NumericalFailure, "SVD of Q^T A failed");
  const auto& s = svd.singularValues();
  Eigen::Index significant = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-12 * s(0)) ++significant;
  require(significant >= k, ErrorKind::RankTooLow,
          "A has numerical rank " + std::to_string(significant) + " < k=" + std::to_string(k));
  Eigen::MatrixXd Z = svd.matrixV().leftCols(k);
  normalize_column_signs(Z);
  return Z;
}

/// P_i = ||Z_(i)||^2 / ||Z||_F^2.
inline Eigen::VectorXd leverage_probabilities(const Eigen::Ref<const Eigen::MatrixXd>& Z) {
  const Eigen::VectorXd row_norms = Z.rowwise().squaredNorm();
  const double total = row_norms.sum();
  require(total > 0.0, ErrorKind::DegenerateInput, "Z is the zero matrix");
  return row_norms / total;
}

struct FeatureDraws {
  std::vector<Eigen::Index> indices;
  Eigen::VectorXd scale;
};

/// r i.i.d. inverse-CDF draws from P using Stream(seed, 1); draw t consumes
/// exactly one uniform. Duplicates are kept.
inline FeatureDraws sample_features(const Eigen::Ref<const Eigen::VectorXd>& P, int r, std::uint64_t seed) {
  require(r >= 1, ErrorKind::InvalidArg, "r must be >= 1");
  require(P.size() >= 1 && P.allFinite() && P.minCoeff() >= 0.0, ErrorKind::InvalidArg,
          "P must be a non-negative finite vector");
  const Eigen::Index n = P.size();
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) cdf[i] = (acc += P(i));
  require(acc > 0.0, ErrorKind::InvalidArg, "P sums to zero");

  Stream rng(seed, 1);
  FeatureDraws out;
  out.scale.resize(r);
  for (int t = 0; t < r; ++t) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    Eigen::Index idx = it == cdf.end() ? n - 1 : static_cast<Eigen::Index>(it - cdf.begin());
    while (P(idx) <= 0.0) --idx;  // only reachable through round-off at the top end
    out.indices.push_back(idx);
    out.scale(t) = 1.0 / std::sqrt(static_cast<double>(r) * P(idx));
  }
  return out;
}

/// C = A Omega S: column t is A(:, i_t) * scale_t.
inline Eigen::MatrixXd apply_plan(const Eigen::Ref<const Eigen::MatrixXd>& A, const SelectionPlan& plan) {
  Eigen::MatrixXd C(A.rows(), plan.r);
  for (int t = 0; t < plan.r; ++t) {
    require(plan.sampled_indices[t] >= 0 && plan.sampled_indices[t] < A.cols(), ErrorKind::ShapeMismatch,
            "plan index out of range for feature matrix");
    C.col(t) = A.col(plan.sampled_indices[t]) * plan.scale(t);
  }
  return C;
}

/// Z^T Omega S (k x r).
inline Eigen::MatrixXd sampled_projection(const Eigen::Ref<const Eigen::MatrixXd>& Z, const SelectionPlan& plan) {
  Eigen::MatrixXd out(Z.cols(), plan.r);
  for (int t = 0; t < plan.r; ++t) out.col(t) = Z.row(plan.sampled_indices[t]).transpose() * plan.scale(t);
  return out;
}

struct Selection {
  SelectionPlan plan;
  FeatureMatrix reduced;
  Eigen::MatrixXd Z;
};

/// Randomized leverage-score feature selection for k-means.
inline Selection select(const FeatureMatrix& A, int k, double epsilon, std::uint64_t seed) {
  A.validate();
  const int r = selection_size(k, epsilon);
  Selection out;
  out.Z = approx_top_right_singular_vectors(A.values, k, r, seed);
  out.plan.k = k;
  out.plan.epsilon = epsilon;
  out.plan.r = r;
  out.plan.seed = seed;
  out.plan.probabilities = leverage_probabilities(out.Z);
  auto draws = sample_features(out.plan.probabilities, r, seed);
  out.plan.sampled_indices = std::move(draws.indices);
  out.plan.scale = std::move(draws.scale);
  out.reduced.values = apply_plan(A.values, out.plan);
  if (!A.names.empty())
    for (auto i : out.plan.sampled_indices) out.reduced.names.push_back(A.names[i]);
  return out;
}

enum class OptimumMode { Exact, Auto };

struct SelectionDiagnostics {
  double gamma_hat = 1.0;
  double f_opt = 0.0;
  bool f_opt_exact = true;  // false when estimated by seeded Lloyd restarts
  double f_selected = 0.0;
  double residual_norm = 0.0;
  double sigma_k_ZOS = 0.0;
};

/// Compares a clustering found on the reduced matrix against the k-means
/// optimum of the full matrix, and reports the residual and sampled-
/// projection quantities that enter the approximation bound.
inline SelectionDiagnostics bound_diagnostics(const Eigen::Ref<const Eigen::MatrixXd>& A, const SelectionPlan& plan,
                                              const Eigen::Ref<const Eigen::MatrixXd>& Z,
                                              const ClusterAssignment& labels_selected,
                                              OptimumMode mode = OptimumMode::Auto, std::uint64_t restart_seed = 0) {
  constexpr Eigen::Index kExactLimit = 12;
  constexpr double kZero = 1e-9;
  require(Z.rows() == A.cols() && Z.cols() == plan.k, ErrorKind::ShapeMismatch, "Z must be n x k");
  require(static_cast<Eigen::Index>(labels_selected.labels.size()) == A.rows(), ErrorKind::ShapeMismatch,
          "labels do not match A");
  if (mode == OptimumMode::Exact)
    require(A.rows() <= kExactLimit, ErrorKind::TooLarge,
            "exact optimum limited to m <= 12 (got " + std::to_string(A.rows()) + ")");

  SelectionDiagnostics d;
  if (A.rows() <= kExactLimit) {
    d.f_opt = exhaustive_kmeans(A, labels_selected.k, kExactLimit).objective;
  } else {
    KmeansConfig cfg;
    cfg.k = labels_selected.k;
    cfg.restarts = 200;
    cfg.seed = restart_seed;
    d.f_opt = kmeans(A, cfg).objective;
    d.f_opt_exact = false;
  }
  d.f_selected = objective_frobenius(A, labels_selected);
  if (d.f_opt <= kZero) {
    require(d.f_selected <= kZero, ErrorKind::DegenerateOptimum,
            "optimal objective is zero but the selected clustering scores " + std::to_string(d.f_selected));
    d.gamma_hat = 1.0;
  } else {
    d.gamma_hat = d.f_selected / d.f_opt;
  }
  d.residual_norm = (A - A * Z * Z.transpose()).norm();
  const Eigen::MatrixXd zos = sampled_projection(Z, plan);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(zos);
  const auto& s = svd.singularValues();
  d.sigma_k_ZOS = s.size() >= plan.k ? s(plan.k - 1) : 0.0;
  return d;
}

}  // namespace fpclust
