#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "nssortho/core.hpp"
#include "nssortho/qr.hpp"

namespace nss {

enum class DerivativeMethod { finite_difference, analytic };

struct ConditionalBetaCov {
  Eigen::Matrix4d cov;
  Eigen::Matrix4d correlation;
  double max_abs_offdiag_corr = 0.0;
  bool degenerate = false;  // rank-deficient design, covariance undefined
};

struct JointCovariance {
  Eigen::Matrix4d cov_gamma;
  Eigen::Matrix2d cov_lambda;
  Eigen::Matrix<double, 4, 2> cross;  // Cov(gamma_hat, lambda_hat)
  Eigen::Matrix2d s;                  // Schur complement G^T(I - Psi Psi^T)G
  Eigen::Matrix<double, 4, 2> c;      // coupling Psi^T G
};

struct BetaCovariance {
  Eigen::Matrix4d cov_beta;
  Eigen::Matrix<double, 4, 6> jacobian;  // d beta / d (gamma, lambda)
  bool conditioning_warning = false;
};

class StepValidityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class WeakIdentificationError : public std::runtime_error {
 public:
  WeakIdentificationError(const std::string& msg, double cond)
      : std::runtime_error(msg), cond_(cond) {}
  double condition() const { return cond_; }

 private:
  double cond_;
};

// sigma^2 (Phi^T Phi)^{-1} computed through R, plus the correlation matrix.
ConditionalBetaCov conditional_beta_cov(const DesignMatrix& phi, double sigma);

// Columns g_j = d(Psi(lambda) gamma)/d lambda_j for the sign-fixed QR.
Eigen::MatrixXd nonlinear_sensitivities(const Eigen::Vector2d& lambda,
                                        const Eigen::Vector4d& gamma,
                                        const MaturityGrid& grid,
                                        DerivativeMethod method);

// First-order joint covariance blocks from the Schur complement of the
// bordered normal matrix [Psi, G].
JointCovariance full_covariance(const OrthoFactorization& fact,
                                const Eigen::MatrixXd& g, double sigma);

// Delta-method covariance of the recovered beta through
// D = [R^{-1}, -R^{-1} Rdot_1 beta, -R^{-1} Rdot_2 beta].
BetaCovariance beta_cov_delta(const OrthoFactorization& fact,
                              const MaturityGrid& grid,
                              const Eigen::Vector2d& lambda,
                              const Eigen::Vector4d& beta,
                              const JointCovariance& joint,
                              DerivativeMethod rdot_method);

// Residual standard deviation estimate sqrt(RSS/(m - 4)).
double sigma_hat_from_rss(double rss, int m);

namespace detail {
// d Phi / d lambda_j in closed form (column 2,3 for j=0; column 4 for j=1).
Eigen::MatrixXd design_derivative(const MaturityGrid& grid,
                                  const Eigen::Vector2d& lambda, int j);
// Differential of the sign-fixed QR: given dPhi, returns (dPsi, dR).
void qr_differential(const OrthoFactorization& fact,
                     const Eigen::MatrixXd& dphi, Eigen::MatrixXd& dpsi,
                     Eigen::Matrix4d& dr);
double fd_step(double lambda_j);
}  // namespace detail

}  // namespace nss
