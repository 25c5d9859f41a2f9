#include "nssortho/covariance.hpp"

#include <cmath>
#include <limits>

namespace nss {

namespace detail {

double fd_step(double lambda_j) { return 1e-6 * std::max(lambda_j, 1.0); }

Eigen::MatrixXd design_derivative(const MaturityGrid& grid,
                                  const Eigen::Vector2d& lambda, int j) {
  const int m = static_cast<int>(grid.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m, 4);
  for (int i = 0; i < m; ++i) {
    const double tau = grid[i];
    if (j == 0) {
      const double x = lambda(0) * tau;
      d(i, 1) = tau * decay_f_prime(x);
      d(i, 2) = tau * (decay_f_prime(x) + std::exp(-x));
    } else {
      const double x = lambda(1) * tau;
      d(i, 3) = tau * (decay_f_prime(x) + std::exp(-x));
    }
  }
  return d;
}

void qr_differential(const OrthoFactorization& fact,
                     const Eigen::MatrixXd& dphi, Eigen::MatrixXd& dpsi,
                     Eigen::Matrix4d& dr) {
  // A = Psi^T dPhi R^{-1} splits as X + U with X skew and U upper
  // triangular; then dR = U R and dPsi = (dPhi - Psi dR) R^{-1}.
  const Eigen::Matrix4d rinv =
      fact.r.triangularView<Eigen::Upper>().solve(Eigen::Matrix4d::Identity());
  const Eigen::Matrix4d a = fact.psi.transpose() * dphi * rinv;
  Eigen::Matrix4d x = Eigen::Matrix4d::Zero();
  for (int i = 1; i < 4; ++i)
    for (int j = 0; j < i; ++j) {
      x(i, j) = a(i, j);
      x(j, i) = -a(i, j);
    }
  const Eigen::Matrix4d u = a - x;
  dr = u * fact.r;
  dpsi = (dphi - fact.psi * dr) * rinv;
}

}  // namespace detail

ConditionalBetaCov conditional_beta_cov(const DesignMatrix& phi,
                                        double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  const OrthoFactorization fact = thin_qr_positive(phi);
  ConditionalBetaCov out;
  if (fact.degenerate) {
    out.degenerate = true;
    out.cov.setZero();
    out.correlation.setZero();
    return out;
  }
  const Eigen::Matrix4d rinv =
      fact.r.triangularView<Eigen::Upper>().solve(Eigen::Matrix4d::Identity());
  out.cov = sigma * sigma * rinv * rinv.transpose();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      out.correlation(i, j) =
          out.cov(i, j) / std::sqrt(out.cov(i, i) * out.cov(j, j));
  out.max_abs_offdiag_corr = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j)
        out.max_abs_offdiag_corr =
            std::max(out.max_abs_offdiag_corr, std::abs(out.correlation(i, j)));
  return out;
}

Eigen::MatrixXd nonlinear_sensitivities(const Eigen::Vector2d& lambda,
                                        const Eigen::Vector4d& gamma,
                                        const MaturityGrid& grid,
                                        DerivativeMethod method) {
  check_lambda(lambda);
  const double step =
      std::max(detail::fd_step(lambda(0)), detail::fd_step(lambda(1)));
  if (std::abs(lambda(0) - lambda(1)) < 10.0 * step)
    throw StepValidityError(
        "lambda components too close to the degenerate manifold for the "
        "derivative step");

  const int m = static_cast<int>(grid.size());
  Eigen::MatrixXd g(m, 2);

  if (method == DerivativeMethod::analytic) {
    const OrthoFactorization fact =
        thin_qr_positive(design_matrix(grid, lambda));
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXd dpsi;
      Eigen::Matrix4d dr;
      detail::qr_differential(fact, detail::design_derivative(grid, lambda, j),
                              dpsi, dr);
      g.col(j) = dpsi * gamma;
    }
    return g;
  }

  for (int j = 0; j < 2; ++j) {
    const double h = detail::fd_step(lambda(j));
    Eigen::Vector2d lp = lambda, lm = lambda;
    lp(j) += h;
    lm(j) -= h;
    const Eigen::VectorXd fp =
        thin_qr_positive(design_matrix(grid, lp)).psi * gamma;
    const Eigen::VectorXd fm =
        thin_qr_positive(design_matrix(grid, lm)).psi * gamma;
    g.col(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

JointCovariance full_covariance(const OrthoFactorization& fact,
                                const Eigen::MatrixXd& g, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  if (g.rows() != fact.psi.rows() || g.cols() != 2)
    throw std::invalid_argument("sensitivity matrix must be m x 2");

  JointCovariance joint;
  joint.c = fact.psi.transpose() * g;
  const Eigen::Matrix2d m = g.transpose() * g;
  joint.s = m - joint.c.transpose() * joint.c;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(joint.s);
  const double emin = eig.eigenvalues()(0);
  // Reference scale: the Schur complement must be well separated from zero
  // relative to the raw curvature M, not merely to its own top eigenvalue --
  // otherwise sensitivities lying entirely inside the fitted span (S ~ 0 in
  // every entry) would slip through.
  const double scale = std::max(eig.eigenvalues()(1), m.norm());
  if (!(emin > 0.0) || emin <= 1e-15 * scale) {
    const double cond = emin > 0.0 ? scale / emin
                                   : std::numeric_limits<double>::infinity();
    throw WeakIdentificationError(
        "Schur complement numerically singular; lambda weakly identified",
        cond);
  }

  const double s2 = sigma * sigma;
  const Eigen::Matrix2d sinv = joint.s.inverse();
  joint.cov_lambda = s2 * sinv;
  joint.cov_gamma =
      s2 * (Eigen::Matrix4d::Identity() + joint.c * sinv * joint.c.transpose());
  joint.cross = -s2 * joint.c * sinv;
  return joint;
}

BetaCovariance beta_cov_delta(const OrthoFactorization& fact,
                              const MaturityGrid& grid,
                              const Eigen::Vector2d& lambda,
                              const Eigen::Vector4d& beta,
                              const JointCovariance& joint,
                              DerivativeMethod rdot_method) {
  if (fact.degenerate) throw SingularRecoveryError(fact.degenerate_index);

  const Eigen::Matrix4d rinv =
      fact.r.triangularView<Eigen::Upper>().solve(Eigen::Matrix4d::Identity());

  Eigen::Matrix4d rdot[2];
  if (rdot_method == DerivativeMethod::analytic) {
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXd dpsi;
      detail::qr_differential(fact, detail::design_derivative(grid, lambda, j),
                              dpsi, rdot[j]);
    }
  } else {
    for (int j = 0; j < 2; ++j) {
      const double h = detail::fd_step(lambda(j));
      Eigen::Vector2d lp = lambda, lm = lambda;
      lp(j) += h;
      lm(j) -= h;
      const Eigen::Matrix4d rp =
          thin_qr_positive(design_matrix(grid, lp)).r;
      const Eigen::Matrix4d rm =
          thin_qr_positive(design_matrix(grid, lm)).r;
      rdot[j] = (rp - rm) / (2.0 * h);
    }
  }

  BetaCovariance out;
  out.jacobian.block<4, 4>(0, 0) = rinv;
  out.jacobian.col(4) = -rinv * rdot[0] * beta;
  out.jacobian.col(5) = -rinv * rdot[1] * beta;

  Eigen::Matrix<double, 6, 6> cov_eta;
  cov_eta.block<4, 4>(0, 0) = joint.cov_gamma;
  cov_eta.block<4, 2>(0, 4) = joint.cross;
  cov_eta.block<2, 4>(4, 0) = joint.cross.transpose();
  cov_eta.block<2, 2>(4, 4) = joint.cov_lambda;

  out.cov_beta = out.jacobian * cov_eta * out.jacobian.transpose();
  out.conditioning_warning = condition_number(Eigen::MatrixXd(fact.r)) > 1e10;
  return out;
}

double sigma_hat_from_rss(double rss, int m) {
  if (m <= 4) throw std::domain_error("need more than 4 observations");
  return std::sqrt(rss / (m - 4));
}

}  // namespace nss
