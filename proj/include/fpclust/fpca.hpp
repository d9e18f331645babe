#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>

#include "fpclust/basis.hpp"
#include "fpclust/error.hpp"

namespace fpclust {

/// Flips the sign of each column so its largest-magnitude entry is positive
/// (ties: lowest index).
inline void normalize_column_signs(Eigen::MatrixXd& M) {
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      if (std::abs(M(i, j)) > best) {
        best = std::abs(M(i, j));
        arg = i;
      }
    }
    if (M.rows() > 0 && M(arg, j) < 0.0) M.col(j) *= -1.0;
  }
}

/// Result of the discrete 2D FPCA eigenproblem (1/N) Cc^T Cc b = lambda b.
/// The eigenfunction for column j is beta_j(s,t) = (phi(s) kron phi(t))^T b_j.
struct FpcaModel {
  Eigen::VectorXd mean_coeffs;
  Eigen::VectorXd eigenvalues;   // retained, descending
  Eigen::MatrixXd eigenvectors;  // K^2 x J
  Eigen::VectorXd spectrum;      // every eigenvalue of M, descending, for variance reports
  BasisConfig basis_config;
  int J = 0;
  Eigen::Index n_samples = 0;

  int dim() const { return basis_config.size(); }

  /// Fraction of total variance carried by each retained component.
  Eigen::VectorXd variance_explained() const {
    const double total = spectrum.sum();
    if (total <= 0.0) return Eigen::VectorXd::Zero(J);
    return eigenvalues / total;
  }
};

inline FpcaModel fit_fpca(const CoefficientMatrix& coeffs, int J) {
  const Eigen::Index N = coeffs.rows();
  const Eigen::Index D = coeffs.cols();
  require(N >= 2, ErrorKind::InvalidArg, "FPCA needs at least 2 samples");
  require(D == static_cast<Eigen::Index>(coeffs.K) * coeffs.K, ErrorKind::ShapeMismatch,
          "coefficient matrix has " + std::to_string(D) + " columns, expected K^2");
  const Eigen::Index cap = std::min(N - 1, D);
  require(J >= 1 && J <= cap, ErrorKind::RankDeficient,
          "requested J=" + std::to_string(J) + " but at most min(N-1, K^2)=" + std::to_string(cap) +
              " components exist");
  require(coeffs.values.allFinite(), ErrorKind::NumericalFailure, "non-finite coefficients");

  FpcaModel model;
  model.basis_config = BasisConfig{coeffs.K};
  model.J = J;
  model.n_samples = N;
  model.mean_coeffs = coeffs.values.colwise().mean().transpose();
  const Eigen::MatrixXd centered = coeffs.values.rowwise() - model.mean_coeffs.transpose();
  const Eigen::MatrixXd M = (centered.transpose() * centered) / static_cast<double>(N);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  require(eig.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigensolver did not converge");

  // Eigen returns ascending order.
  Eigen::VectorXd values = eig.eigenvalues().reverse();
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double floor = -1e-10 * std::max(1.0, values(0));
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    require(values(j) >= floor, ErrorKind::NumericalFailure,
            "covariance eigenvalue " + std::to_string(values(j)) + " is negative beyond round-off");
    values(j) = std::max(values(j), 0.0);
  }
  model.spectrum = values;
  model.eigenvalues = values.head(J);
  model.eigenvectors = vectors.leftCols(J);
  normalize_column_signs(model.eigenvectors);
  return model;
}

/// FPC scores xi_ij = (C_i - mean) . b_j. Equal to the integral of the
/// centered image against beta_j since both bases are orthonormal.
inline Eigen::MatrixXd transform(const FpcaModel& model, const CoefficientMatrix& coeffs) {
  require(coeffs.cols() == model.dim(), ErrorKind::ShapeMismatch,
          "coefficient width " + std::to_string(coeffs.cols()) + " != model K^2=" + std::to_string(model.dim()));
  return (coeffs.values.rowwise() - model.mean_coeffs.transpose()) * model.eigenvectors;
}

/// mean + sum_{j < J_use} xi_j b_j, as a K^2 coefficient vector.
inline Eigen::VectorXd reconstruct(const FpcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& scores,
                                   int J_use) {
  require(scores.size() == model.J, ErrorKind::ShapeMismatch,
          "score row has " + std::to_string(scores.size()) + " entries, model has J=" + std::to_string(model.J));
  require(J_use >= 0 && J_use <= model.J, ErrorKind::ShapeMismatch,
          "J_use=" + std::to_string(J_use) + " outside [0, " + std::to_string(model.J) + "]");
  return model.mean_coeffs + model.eigenvectors.leftCols(J_use) * scores.head(J_use);
}

/// beta_j sampled on the pixel grid (j is 0-based).
inline Eigen::MatrixXd eigenfunction_image(const FpcaModel& model, int j, Eigen::Index height, Eigen::Index width) {
  require(j >= 0 && j < model.J, ErrorKind::InvalidArg, "component index out of range");
  return synthesize_image(model.eigenvectors.col(j), model.basis_config, height, width);
}

}  // namespace fpclust
