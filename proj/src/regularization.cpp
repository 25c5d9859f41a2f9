#include "nssortho/regularization.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

#include "nssortho/parallel.hpp"
#include "nssortho/rng.hpp"

namespace nss {

namespace {

void check_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::domain_error("ridge penalty must be finite and >= 0");
}

}  // namespace

RidgeResult ridge_standard(const DesignMatrix& phi, const Eigen::VectorXd& y,
                           double alpha) {
  check_alpha(alpha);
  if (y.size() != phi.values.rows())
    throw std::invalid_argument("response length does not match design");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      phi.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Vector4d s = svd.singularValues();
  const Eigen::Vector4d uty = svd.matrixU().transpose() * y;

  RidgeResult out;
  out.alpha = alpha;
  out.basis = CoefficientBasis::standard;
  Eigen::Vector4d filtered;
  Eigen::Vector4d factors;
  for (int i = 0; i < 4; ++i) {
    const double s2 = s(i) * s(i);
    factors(i) = s2 / (s2 + alpha);
    filtered(i) = (s2 + alpha) > 0.0 ? s(i) * uty(i) / (s2 + alpha) : 0.0;
  }
  out.coefficients = svd.matrixV() * filtered;
  out.filter_factors = factors;
  return out;
}

RidgeResult ridge_orthogonal(const OrthoFactorization& fact,
                             const Eigen::VectorXd& y, double alpha) {
  check_alpha(alpha);
  RidgeResult out;
  out.alpha = alpha;
  out.basis = CoefficientBasis::orthogonal;
  out.coefficients = orthogonal_fit(fact, y) / (1.0 + alpha);
  return out;
}

GcvSelection gcv_select(const DesignMatrix& phi, const Eigen::VectorXd& y,
                        const std::vector<double>& alphas) {
  if (alphas.empty()) throw std::invalid_argument("empty penalty grid");
  const long m = phi.values.rows();
  if (y.size() != m)
    throw std::invalid_argument("response length does not match design");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      phi.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Vector4d s = svd.singularValues();
  const Eigen::Vector4d uty = svd.matrixU().transpose() * y;
  // Part of y orthogonal to the column space never changes with alpha.
  const double base_rss = y.squaredNorm() - uty.squaredNorm();

  GcvSelection out;
  out.alphas = alphas;
  out.scores.resize(alphas.size());
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    check_alpha(alphas[k]);
    double rss = base_rss;
    double trace = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double s2 = s(i) * s(i);
      const double f = s2 / (s2 + alphas[k]);
      trace += f;
      const double r = (1.0 - f) * uty(i);
      rss += r * r;
    }
    const double denom = static_cast<double>(m) - trace;
    out.scores[k] = static_cast<double>(m) * rss / (denom * denom);
  }

  std::size_t best = 0;
  for (std::size_t k = 1; k < alphas.size(); ++k)
    if (out.scores[k] < out.scores[best]) best = k;
  out.alpha_star = alphas[best];
  return out;
}

std::vector<double> default_alpha_grid(int n, double lo, double hi) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo))
    throw std::invalid_argument("bad penalty grid parameters");
  std::vector<double> grid(n);
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    grid[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (n - 1));
  return grid;
}

ShrinkageComparison shrinkage_comparison(const MaturityGrid& grid,
                                         const NssParams& truth, double sigma,
                                         const std::vector<double>& alphas,
                                         int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("need at least one trial");
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  if (alphas.empty()) throw std::invalid_argument("empty penalty grid");

  const DesignMatrix phi = design_matrix(grid, truth.lambda);
  const OrthoFactorization fact = thin_qr_positive(phi);
  const Eigen::VectorXd y_true = phi.values * truth.beta;
  const long m = grid.size();
  const std::size_t na = alphas.size();

  // Accumulate squared errors per trial in parallel, then reduce.
  std::vector<double> se_std(static_cast<std::size_t>(n_trials) * na, 0.0);
  std::vector<double> se_orth(se_std.size(), 0.0);

  parallel_for(n_trials, [&](long t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    Eigen::VectorXd y(m);
    for (long i = 0; i < m; ++i) y(i) = y_true(i) + sigma * rng.normal();
    for (std::size_t k = 0; k < na; ++k) {
      const Eigen::Vector4d b_std =
          ridge_standard(phi, y, alphas[k]).coefficients;
      const Eigen::Vector4d g =
          ridge_orthogonal(fact, y, alphas[k]).coefficients;
      const Eigen::Vector4d b_orth = recover_beta(fact, g, 4);
      se_std[static_cast<std::size_t>(t) * na + k] =
          (b_std - truth.beta).squaredNorm();
      se_orth[static_cast<std::size_t>(t) * na + k] =
          (b_orth - truth.beta).squaredNorm();
    }
  });

  ShrinkageComparison out;
  out.rows.resize(na);
  for (std::size_t k = 0; k < na; ++k) {
    double acc_s = 0.0;
    double acc_o = 0.0;
    for (int t = 0; t < n_trials; ++t) {
      acc_s += se_std[static_cast<std::size_t>(t) * na + k];
      acc_o += se_orth[static_cast<std::size_t>(t) * na + k];
    }
    out.rows[k].alpha = alphas[k];
    out.rows[k].mse_standard = acc_s / n_trials;
    out.rows[k].mse_orthogonal = acc_o / n_trials;
  }

  std::size_t bs = 0;
  std::size_t bo = 0;
  for (std::size_t k = 1; k < na; ++k) {
    if (out.rows[k].mse_standard < out.rows[bs].mse_standard) bs = k;
    if (out.rows[k].mse_orthogonal < out.rows[bo].mse_orthogonal) bo = k;
  }
  out.best_mse_standard = out.rows[bs].mse_standard;
  out.best_alpha_standard = out.rows[bs].alpha;
  out.best_mse_orthogonal = out.rows[bo].mse_orthogonal;
  out.best_alpha_orthogonal = out.rows[bo].alpha;
  return out;
}

}  // namespace nss
