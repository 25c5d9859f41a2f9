#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nssortho/core.hpp"
#include "nssortho/qr.hpp"

namespace nss {

enum class CoefficientBasis { standard, orthogonal };

struct RidgeResult {
  double alpha = 0.0;
  Eigen::Vector4d coefficients = Eigen::Vector4d::Zero();
  CoefficientBasis basis = CoefficientBasis::standard;
  // Shrinkage applied along each singular direction (standard basis only).
  std::optional<Eigen::Vector4d> filter_factors;
};

// Ridge on the raw design: beta_alpha = (Phi^T Phi + alpha I)^{-1} Phi^T y,
// computed through the SVD filter-factor form.
RidgeResult ridge_standard(const DesignMatrix& phi, const Eigen::VectorXd& y,
                           double alpha);

// Ridge on the orthonormalized design: every coordinate shrinks by the same
// factor 1/(1 + alpha).
RidgeResult ridge_orthogonal(const OrthoFactorization& fact,
                             const Eigen::VectorXd& y, double alpha);

struct GcvSelection {
  double alpha_star = 0.0;
  std::vector<double> alphas;
  std::vector<double> scores;
};

// Generalized cross-validation over a grid of ridge penalties on the raw
// design. Ties resolve to the smallest alpha.
GcvSelection gcv_select(const DesignMatrix& phi, const Eigen::VectorXd& y,
                        const std::vector<double>& alphas);

std::vector<double> default_alpha_grid(int n = 25, double lo = 1e-10,
                                       double hi = 1.0);

struct ShrinkageRow {
  double alpha = 0.0;
  double mse_standard = 0.0;    // E ||beta_alpha - beta_true||^2
  double mse_orthogonal = 0.0;  // same, coefficients mapped back to beta
};

struct ShrinkageComparison {
  std::vector<ShrinkageRow> rows;
  double best_mse_standard = 0.0;
  double best_alpha_standard = 0.0;
  double best_mse_orthogonal = 0.0;
  double best_alpha_orthogonal = 0.0;
};

// Monte Carlo comparison of the two ridge flavors at a fixed true curve.
ShrinkageComparison shrinkage_comparison(const MaturityGrid& grid,
                                         const NssParams& truth, double sigma,
                                         const std::vector<double>& alphas,
                                         int n_trials, std::uint64_t seed);

}  // namespace nss
