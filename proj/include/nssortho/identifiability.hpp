#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nssortho/core.hpp"

namespace nss {

// Jacobian of the model curve with respect to (beta1..beta4, lambda1,
// lambda2), evaluated on the maturity grid. Columns 0..3 are the basis
// functions themselves; columns 4..5 are the curve sensitivities to the
// decay rates.
Eigen::MatrixXd model_jacobian(const NssParams& params,
                               const MaturityGrid& grid);

struct IdentifiabilityReport {
  Eigen::MatrixXd jacobian;  // m x 6
  int rank = 6;
  Eigen::VectorXd singular_values;
  // Orthonormal basis for the null space of the Jacobian (one vector per
  // lost direction), in (beta, lambda) coordinates.
  std::vector<Eigen::VectorXd> null_basis;
  // Human-readable parameter combinations that remain identifiable when the
  // model collapses; empty when the full parameter vector is identifiable.
  std::vector<std::string> identifiable_quantities;
};

IdentifiabilityReport rank_analysis(const NssParams& params,
                                    const MaturityGrid& grid,
                                    double tol = 1e-9);

struct SensitivityGram {
  Eigen::MatrixXd gram;  // 8 x 8
  double min_eigenvalue = 0.0;
};

// Gram matrix, under the discrete inner product on `grid`, of the eight
// functions spanning the model's value and lambda-derivative space:
// {1, tau, e^{-l1 tau}, tau e^{-l1 tau}, tau^2 e^{-l1 tau},
//  e^{-l2 tau}, tau e^{-l2 tau}, tau^2 e^{-l2 tau}}.
// A positive minimum eigenvalue certifies their independence on the sample.
SensitivityGram sensitivity_basis_gram(const Eigen::Vector2d& lambda,
                                       const MaturityGrid& grid);

}  // namespace nss
