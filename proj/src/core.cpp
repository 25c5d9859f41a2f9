#include "nssortho/core.hpp"

#include <cmath>

namespace nss {

double decay_f(double x) {
  if (std::abs(x) < 1e-4) {
    // 1 - x/2 + x^2/6 - x^3/24; next term is x^4/120 < 1e-18 here
    return 1.0 + x * (-0.5 + x * (1.0 / 6.0 + x * (-1.0 / 24.0)));
  }
  // expm1 avoids the 1 - e^{-x} cancellation that costs ~eps/x accuracy
  // just above the series cutoff.
  return -std::expm1(-x) / x;
}

double decay_f_prime(double x) {
  if (std::abs(x) < 1e-4) {
    // -1/2 + x/3 - x^2/8 + x^3/30
    return -0.5 + x * (1.0 / 3.0 + x * (-0.125 + x * (1.0 / 30.0)));
  }
  return (std::exp(-x) * (1.0 + x) - 1.0) / (x * x);
}

double basis_value(int j, const Eigen::Vector2d& lambda, double tau) {
  check_lambda(lambda);
  if (!(tau > 0.0)) throw std::domain_error("tau must be positive");
  switch (j) {
    case 1:
      return 1.0;
    case 2:
      return decay_f(lambda(0) * tau);
    case 3:
      return decay_f(lambda(0) * tau) - std::exp(-lambda(0) * tau);
    case 4:
      return decay_f(lambda(1) * tau) - std::exp(-lambda(1) * tau);
    default:
      throw std::domain_error("basis index must be 1..4");
  }
}

DesignMatrix design_matrix(const MaturityGrid& grid,
                           const Eigen::Vector2d& lambda) {
  check_lambda(lambda);
  const int m = static_cast<int>(grid.size());
  Eigen::MatrixXd phi(m, 4);
  for (int i = 0; i < m; ++i) {
    const double tau = grid[i];
    const double x1 = lambda(0) * tau;
    const double x2 = lambda(1) * tau;
    phi(i, 0) = 1.0;
    phi(i, 1) = decay_f(x1);
    phi(i, 2) = decay_f(x1) - std::exp(-x1);
    phi(i, 3) = decay_f(x2) - std::exp(-x2);
  }
  return DesignMatrix{std::move(phi), grid, lambda};
}

Eigen::VectorXd curve_eval(const NssParams& params, const MaturityGrid& grid) {
  return design_matrix(grid, params.lambda).values * params.beta;
}

TaylorCoefficients taylor_coefficients(const NssParams& params) {
  const auto& b = params.beta;
  const auto& l = params.lambda;
  check_lambda(l);
  return TaylorCoefficients{
      b(0) + b(1), 0.5 * (l(0) * (b(2) - b(1)) + l(1) * b(3))};
}

}  // namespace nss
