#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "fpclust/error.hpp"
#include "fpclust/image_io.hpp"

namespace fpclust {

/// Number of 1D Fourier functions per axis on [0,1]. Must be odd.
struct BasisConfig {
  int K = 1;

  void validate() const {
    require(K >= 1 && K % 2 == 1, ErrorKind::InvalidConfig,
            "basis K must be odd and >= 1 (got " + std::to_string(K) + ")");
  }
  void validate_for(Eigen::Index height, Eigen::Index width) const {
    validate();
    require(K <= std::min(height, width), ErrorKind::InvalidConfig,
            "basis K=" + std::to_string(K) + " exceeds min grid dimension " +
                std::to_string(std::min(height, width)));
  }
  int size() const { return K * K; }
};

/// Basis values on a midpoint grid: values(g, k) = phi_k(u_g), u_g = (g + 0.5) / G.
struct BasisMatrix {
  Eigen::MatrixXd values;
  Eigen::VectorXd grid_points;
};

/// N x K^2 expansion coefficients. Row i is the row-major vec of the K x K
/// block B_i, so column k*K + l multiplies phi_k(s) phi_l(t) (0-based).
struct CoefficientMatrix {
  Eigen::MatrixXd values;
  int K = 1;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

/// phi_1 = 1; phi_{2j} = sqrt2 sin(2 pi j u); phi_{2j+1} = sqrt2 cos(2 pi j u).
/// Index is 1-based to match the usual Fourier ordering.
inline double fourier_phi(int index, double u) {
  if (index == 1) return 1.0;
  const int j = index / 2;
  const double arg = 2.0 * std::numbers::pi * j * u;
  return std::numbers::sqrt2 * (index % 2 == 0 ? std::sin(arg) : std::cos(arg));
}

inline BasisMatrix evaluate_basis(int K, Eigen::Index G) {
  BasisConfig{K}.validate();
  require(G >= K, ErrorKind::InvalidConfig,
          "grid size " + std::to_string(G) + " smaller than K=" + std::to_string(K));
  BasisMatrix b;
  b.grid_points.resize(G);
  b.values.resize(G, K);
  for (Eigen::Index g = 0; g < G; ++g) {
    const double u = (static_cast<double>(g) + 0.5) / static_cast<double>(G);
    b.grid_points(g) = u;
    for (int k = 0; k < K; ++k) b.values(g, k) = fourier_phi(k + 1, u);
  }
  return b;
}

inline Eigen::MatrixXd unvec_row_major(const Eigen::Ref<const Eigen::VectorXd>& coeffs, int K) {
  require(coeffs.size() == static_cast<Eigen::Index>(K) * K, ErrorKind::ShapeMismatch,
          "coefficient vector length " + std::to_string(coeffs.size()) + " != K^2=" +
              std::to_string(K * K));
  Eigen::MatrixXd B(K, K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) B(k, l) = coeffs(k * K + l);
  return B;
}

inline Eigen::VectorXd vec_row_major(const Eigen::MatrixXd& B) {
  Eigen::VectorXd v(B.size());
  for (Eigen::Index k = 0; k < B.rows(); ++k)
    for (Eigen::Index l = 0; l < B.cols(); ++l) v(k * B.cols() + l) = B(k, l);
  return v;
}

namespace detail {

inline Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.info() == Eigen::Success, ErrorKind::NumericalFailure, "SVD did not converge");
  const auto& s = svd.singularValues();
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(M.rows(), M.cols())) *
                     (s.size() ? s(0) : 0.0);
  Eigen::VectorXd inv = s.unaryExpr([tol](double x) { return x > tol ? 1.0 / x : 0.0; });
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace detail

/// Least-squares tensor-product fit of one image:
/// B = pinv(Phi_s) X pinv(Phi_t)^T.
class CoefficientFitter {
 public:
  CoefficientFitter(const BasisConfig& config, Eigen::Index height, Eigen::Index width) : config_(config) {
    config.validate_for(height, width);
    pinv_s_ = detail::pseudo_inverse(evaluate_basis(config.K, height).values);
    pinv_t_ = detail::pseudo_inverse(evaluate_basis(config.K, width).values);
  }

  Eigen::VectorXd fit(const Eigen::MatrixXd& pixels) const {
    require(pixels.rows() == pinv_s_.cols() && pixels.cols() == pinv_t_.cols(), ErrorKind::ShapeMismatch,
            "image shape does not match fitter grid");
    const Eigen::MatrixXd B = pinv_s_ * pixels * pinv_t_.transpose();
    return vec_row_major(B);
  }

 private:
  BasisConfig config_;
  Eigen::MatrixXd pinv_s_;
  Eigen::MatrixXd pinv_t_;
};

inline CoefficientMatrix fit_coefficients(const Dataset& dataset, const BasisConfig& config) {
  require(dataset.size() > 0, ErrorKind::InvalidArg, "empty dataset");
  const CoefficientFitter fitter(config, dataset.height(), dataset.width());
  CoefficientMatrix C{Eigen::MatrixXd(static_cast<Eigen::Index>(dataset.size()), config.size()), config.K};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& img = dataset.images[i];
    require(img.height() == dataset.height() && img.width() == dataset.width(), ErrorKind::DimensionMismatch,
            "image '" + img.id + "' differs in size");
    C.values.row(static_cast<Eigen::Index>(i)) = fitter.fit(img.pixels).transpose();
  }
  require(C.values.allFinite(), ErrorKind::NumericalFailure, "non-finite coefficients");
  return C;
}

/// Phi_s B Phi_t^T for the row-major block B; not clamped.
inline Eigen::MatrixXd synthesize_image(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const BasisConfig& config,
                                        Eigen::Index height, Eigen::Index width) {
  config.validate_for(height, width);
  const Eigen::MatrixXd B = unvec_row_major(coeffs, config.K);
  return evaluate_basis(config.K, height).values * B * evaluate_basis(config.K, width).values.transpose();
}

}  // namespace fpclust
