#include "nssortho/identifiability.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nssortho/covariance.hpp"

namespace nss {

Eigen::MatrixXd model_jacobian(const NssParams& params,
                               const MaturityGrid& grid) {
  check_lambda(params.lambda);
  const long m = grid.size();
  Eigen::MatrixXd j(m, 6);
  j.leftCols<4>() = design_matrix(grid, params.lambda).values;
  const Eigen::MatrixXd d1 =
      detail::design_derivative(grid, params.lambda, 0);
  const Eigen::MatrixXd d2 =
      detail::design_derivative(grid, params.lambda, 1);
  j.col(4) = params.beta(1) * d1.col(1) + params.beta(2) * d1.col(2);
  j.col(5) = params.beta(3) * d2.col(3);
  return j;
}

IdentifiabilityReport rank_analysis(const NssParams& params,
                                    const MaturityGrid& grid, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("rank tolerance must be > 0");
  IdentifiabilityReport report;
  report.jacobian = model_jacobian(params, grid);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      report.jacobian, Eigen::ComputeThinU | Eigen::ComputeFullV);
  report.singular_values = svd.singularValues();
  const double smax = report.singular_values(0);

  report.rank = 0;
  for (long i = 0; i < report.singular_values.size(); ++i)
    if (report.singular_values(i) > tol * smax) ++report.rank;

  const Eigen::MatrixXd& v = svd.matrixV();
  for (long i = report.rank; i < 6; ++i)
    report.null_basis.push_back(v.col(i));

  if (report.rank == 4 && params.lambda(0) == params.lambda(1)) {
    report.identifiable_quantities = {"beta1", "beta2", "beta3+beta4",
                                      "lambda"};
  }
  return report;
}

SensitivityGram sensitivity_basis_gram(const Eigen::Vector2d& lambda,
                                       const MaturityGrid& grid) {
  check_lambda(lambda);

  // Function list: {1, tau} then {e, tau e, tau^2 e} at rate l1, same at l2.
  const long m = static_cast<long>(grid.size());
  Eigen::MatrixXd b(m, 8);
  for (long i = 0; i < m; ++i) {
    const double tau = grid[static_cast<std::size_t>(i)];
    const double ea = std::exp(-lambda(0) * tau);
    const double eb = std::exp(-lambda(1) * tau);
    b(i, 0) = 1.0;
    b(i, 1) = tau;
    b(i, 2) = ea;
    b(i, 3) = tau * ea;
    b(i, 4) = tau * tau * ea;
    b(i, 5) = eb;
    b(i, 6) = tau * eb;
    b(i, 7) = tau * tau * eb;
  }

  SensitivityGram out;
  out.gram = b.transpose() * b;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.gram);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  return out;
}

}  // namespace nss
