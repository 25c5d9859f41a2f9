#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "nssortho/core.hpp"

namespace nss {

struct OrthoFactorization {
  Eigen::MatrixXd psi;  // m x 4, orthonormal columns when not degenerate
  Eigen::Matrix4d r;    // upper triangular, nonnegative diagonal
  bool degenerate = false;   // some diagonal vanished to machine precision
  int degenerate_index = -1; // first offending diagonal (0-based)
};

struct InnerFit {
  Eigen::Vector4d gamma;
  int p = 4;               // model order used for the fitted curve
  Eigen::Vector4d beta;    // beta(3) = 0 when p == 3
  double r44 = 0.0;
  double kappa = 0.0;
  Eigen::VectorXd fitted;
  double residual_norm = 0.0;
};

class SingularRecoveryError : public std::runtime_error {
 public:
  explicit SingularRecoveryError(int diagonal_index)
      : std::runtime_error("triangular solve hit a zero diagonal at index " +
                           std::to_string(diagonal_index + 1)),
        index_(diagonal_index) {}
  int diagonal_index() const { return index_; }

 private:
  int index_;
};

// Unpivoted Householder QR of an m x 4 matrix with signs flipped so every
// R_jj >= 0. Exact rank deficiency is flagged, not thrown.
OrthoFactorization thin_qr_positive(const Eigen::MatrixXd& phi);

inline OrthoFactorization thin_qr_positive(const DesignMatrix& phi) {
  return thin_qr_positive(phi.values);
}

// Factorization of diag(sqrt(w)) * Phi.
OrthoFactorization weighted_qr(const DesignMatrix& phi,
                               const Eigen::VectorXd& w);

Eigen::Vector4d orthogonal_fit(const OrthoFactorization& fact,
                               const Eigen::VectorXd& y);

Eigen::Vector4d recover_beta(const OrthoFactorization& fact,
                             const Eigen::Vector4d& gamma, int p);

// Ratio of extreme singular values; +inf when the smallest one is zero to
// machine precision.
double condition_number(const Eigen::MatrixXd& phi);

inline double condition_number(const DesignMatrix& phi) {
  return condition_number(phi.values);
}

// QR, gamma = Psi^T y, p = 3 iff |R44| < sigma/delta, fitted curve from the
// first p columns, beta recovered through R.
InnerFit inner_step(const MaturityGrid& grid, const Eigen::VectorXd& y,
                    const Eigen::Vector2d& lambda, double sigma, double delta);

// Default threshold delta = 10*sigma.
inline InnerFit inner_step(const MaturityGrid& grid, const Eigen::VectorXd& y,
                           const Eigen::Vector2d& lambda, double sigma) {
  return inner_step(grid, y, lambda, sigma, 10.0 * sigma);
}

}  // namespace nss
