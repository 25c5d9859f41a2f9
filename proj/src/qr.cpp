#include "nssortho/qr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nss {

OrthoFactorization thin_qr_positive(const Eigen::MatrixXd& phi) {
  const int m = static_cast<int>(phi.rows());
  const int n = static_cast<int>(phi.cols());
  if (n != 4) throw std::invalid_argument("thin_qr_positive expects 4 columns");
  if (m < n) throw std::invalid_argument("need at least 4 rows");

  Eigen::MatrixXd work = phi;
  Eigen::MatrixXd vs = Eigen::MatrixXd::Zero(m, n);  // Householder vectors
  Eigen::Vector4d taus = Eigen::Vector4d::Zero();    // 2 / v^T v

  for (int j = 0; j < n; ++j) {
    const int len = m - j;
    Eigen::VectorXd x = work.col(j).tail(len);
    const double xnorm = x.norm();
    if (xnorm == 0.0) continue;  // column already annihilated; R_jj = 0
    Eigen::VectorXd v = x;
    v(0) += std::copysign(xnorm, x(0));
    const double vsq = v.squaredNorm();
    if (vsq == 0.0) continue;
    const double tau = 2.0 / vsq;
    // apply I - tau v v^T to the remaining block
    for (int k = j; k < n; ++k) {
      const double s = tau * v.dot(work.col(k).tail(len));
      work.col(k).tail(len) -= s * v;
    }
    work(j, j) = -std::copysign(xnorm, x(0));
    work.col(j).tail(len - 1).setZero();
    vs.col(j).tail(len) = v;
    taus(j) = tau;
  }

  // Accumulate the thin Q by applying the reflectors to [I; 0] backwards.
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(m, n);
  for (int j = n - 1; j >= 0; --j) {
    if (taus(j) == 0.0) continue;
    const int len = m - j;
    const auto v = vs.col(j).tail(len);
    for (int k = 0; k < n; ++k) {
      const double s = taus(j) * v.dot(psi.col(k).tail(len));
      psi.col(k).tail(len) -= s * v;
    }
  }

  Eigen::Matrix4d r = work.topRows(n).triangularView<Eigen::Upper>();

  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) {
      r.row(j) = -r.row(j);
      psi.col(j) = -psi.col(j);
    }
  }

  OrthoFactorization fact{std::move(psi), r, false, -1};
  const double scale = phi.norm();
  const double tol = 1e-12 * scale;
  for (int j = 0; j < n; ++j) {
    if (std::abs(r(j, j)) <= tol) {
      fact.degenerate = true;
      fact.degenerate_index = j;
      break;
    }
  }
  return fact;
}

OrthoFactorization weighted_qr(const DesignMatrix& phi,
                               const Eigen::VectorXd& w) {
  if (w.size() != phi.values.rows())
    throw std::invalid_argument("weight vector length mismatch");
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (!(w(i) > 0.0)) throw std::domain_error("weights must be positive");
  Eigen::MatrixXd scaled = w.array().sqrt().matrix().asDiagonal() * phi.values;
  return thin_qr_positive(scaled);
}

Eigen::Vector4d orthogonal_fit(const OrthoFactorization& fact,
                               const Eigen::VectorXd& y) {
  if (y.size() != fact.psi.rows())
    throw std::invalid_argument("observation vector length mismatch");
  return fact.psi.transpose() * y;
}

Eigen::Vector4d recover_beta(const OrthoFactorization& fact,
                             const Eigen::Vector4d& gamma, int p) {
  if (p != 3 && p != 4) throw std::invalid_argument("p must be 3 or 4");
  if (fact.degenerate && fact.degenerate_index < p)
    throw SingularRecoveryError(fact.degenerate_index);
  Eigen::Vector4d beta = Eigen::Vector4d::Zero();
  for (int i = p - 1; i >= 0; --i) {
    if (fact.r(i, i) == 0.0) throw SingularRecoveryError(i);
    double s = gamma(i);
    for (int k = i + 1; k < p; ++k) s -= fact.r(i, k) * beta(k);
    beta(i) = s / fact.r(i, i);
  }
  return beta;
}

double condition_number(const Eigen::MatrixXd& phi) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double tol = std::numeric_limits<double>::epsilon() *
                     static_cast<double>(std::max(phi.rows(), phi.cols())) *
                     smax;
  if (smin <= tol) return std::numeric_limits<double>::infinity();
  return smax / smin;
}

InnerFit inner_step(const MaturityGrid& grid, const Eigen::VectorXd& y,
                    const Eigen::Vector2d& lambda, double sigma,
                    double delta) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  if (!(delta > 0.0)) throw std::domain_error("delta must be positive");
  const DesignMatrix phi = design_matrix(grid, lambda);
  const OrthoFactorization fact = thin_qr_positive(phi);
  InnerFit fit;
  fit.gamma = orthogonal_fit(fact, y);
  fit.r44 = std::abs(fact.r(3, 3));
  fit.kappa = condition_number(phi);
  fit.p = (fit.r44 < sigma / delta) ? 3 : 4;
  fit.fitted = fact.psi.leftCols(fit.p) * fit.gamma.head(fit.p);
  fit.beta = recover_beta(fact, fit.gamma, fit.p);
  fit.residual_norm = (y - fit.fitted).norm();
  return fit;
}

}  // namespace nss
