#include "nssortho/gram.hpp"

#include <cmath>

#include "nssortho/core.hpp"

namespace nss {

namespace detail {

double e1_series(double x) {
  // E_1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
  double sum = 0.0;
  double pow_term = 1.0;  // (-x)^k / k!
  for (int k = 1; k <= 80; ++k) {
    pow_term *= -x / k;
    const double add = -pow_term / k;
    sum += add;
    if (std::abs(add) <= 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return sum - kEulerGamma - std::log(x);
}

double e1_continued_fraction(double x) {
  // e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...))), modified Lentz
  const double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 20000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= 1e-16) break;
  }
  return h * std::exp(-x);
}

}  // namespace detail

double exp_integral_e1(double x) {
  if (!(x > 0.0)) throw std::domain_error("exp_integral_e1 requires x > 0");
  return x <= 1.0 ? detail::e1_series(x) : detail::e1_continued_fraction(x);
}

HelperIntegrals helper_integrals(double a, double b, double T) {
  if (!(a > 0.0) || !(b > 0.0) || !(T > 0.0))
    throw std::domain_error("helper_integrals requires a, b, T > 0");
  HelperIntegrals h;
  h.i = (1.0 - std::exp(-a * T)) / a;
  h.f = (kEulerGamma + std::log(a * T) + exp_integral_e1(a * T)) / a;
  h.fe = (std::log((a + b) / b) + exp_integral_e1((a + b) * T) -
          exp_integral_e1(b * T)) /
         a;
  const double boundary =
      (1.0 - std::exp(-a * T) - std::exp(-b * T) + std::exp(-(a + b) * T)) / T;
  h.k = (a * std::log((a + b) / a) + b * std::log((a + b) / b) +
         (a + b) * exp_integral_e1((a + b) * T) - a * exp_integral_e1(a * T) -
         b * exp_integral_e1(b * T) - boundary) /
        (a * b);
  return h;
}

GramMatrix gram_matrix(const Eigen::Vector2d& lambda, double horizon) {
  check_lambda(lambda);
  if (!(horizon > 0.0)) throw std::domain_error("horizon must be positive");
  const double a = lambda(0);
  const double b = lambda(1);
  const double T = horizon;

  const HelperIntegrals ha = helper_integrals(a, a, T);   // I_T(a), F_T(a), FE(a,a), K(a,a)
  const HelperIntegrals hb = helper_integrals(b, b, T);
  const HelperIntegrals hab = helper_integrals(a, b, T);  // FE(a,b), K(a,b)
  const HelperIntegrals hba = helper_integrals(b, a, T);  // FE(b,a)
  const double i2a = (1.0 - std::exp(-2.0 * a * T)) / (2.0 * a);
  const double i2b = (1.0 - std::exp(-2.0 * b * T)) / (2.0 * b);
  const double iab = (1.0 - std::exp(-(a + b) * T)) / (a + b);

  Eigen::Matrix4d g;
  g(0, 0) = T;
  g(0, 1) = ha.f;
  g(0, 2) = ha.f - ha.i;
  g(0, 3) = hb.f - hb.i;
  g(1, 1) = ha.k;
  g(1, 2) = ha.k - ha.fe;
  g(1, 3) = hab.k - hab.fe;
  g(2, 2) = ha.k - 2.0 * ha.fe + i2a;
  g(2, 3) = hab.k - hab.fe - hba.fe + iab;
  g(3, 3) = hb.k - 2.0 * hb.fe + i2b;
  for (int i = 1; i < 4; ++i)
    for (int j = 0; j < i; ++j) g(i, j) = g(j, i);

  return GramMatrix{g, horizon, lambda};
}

ContinuousBasis continuous_basis(const Eigen::Vector2d& lambda,
                                 double horizon) {
  const GramMatrix gm = gram_matrix(lambda, horizon);
  ContinuousBasis basis;
  basis.lambda = lambda;
  basis.horizon = horizon;
  basis.l = Eigen::Matrix4d::Zero();

  // Hand-rolled Cholesky so a vanishing pivot is flagged, not thrown.
  const double tol = 1e-12 * gm.g.trace();
  for (int j = 0; j < 4; ++j) {
    double d = gm.g(j, j);
    for (int k = 0; k < j; ++k) d -= basis.l(j, k) * basis.l(j, k);
    if (d <= tol) {
      basis.degenerate = true;
      basis.zero_pivot_index = j;
      break;
    }
    basis.l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < 4; ++i) {
      double s = gm.g(i, j);
      for (int k = 0; k < j; ++k) s -= basis.l(i, k) * basis.l(j, k);
      basis.l(i, j) = s / basis.l(j, j);
    }
  }
  basis.r_t = basis.l.transpose();
  return basis;
}

Eigen::Matrix3d decaying_gram_infinite(const Eigen::Vector2d& lambda) {
  check_lambda(lambda);
  const double a = lambda(0);
  const double b = lambda(1);

  auto fe_inf = [](double p, double q) { return std::log((p + q) / q) / p; };
  auto k_inf = [](double p, double q) {
    return (p * std::log((p + q) / p) + q * std::log((p + q) / q)) / (p * q);
  };

  Eigen::Matrix3d m;
  m(0, 0) = k_inf(a, a);
  m(0, 1) = k_inf(a, a) - fe_inf(a, a);
  m(0, 2) = k_inf(a, b) - fe_inf(a, b);
  m(1, 1) = k_inf(a, a) - 2.0 * fe_inf(a, a) + 1.0 / (2.0 * a);
  m(1, 2) = k_inf(a, b) - fe_inf(a, b) - fe_inf(b, a) + 1.0 / (a + b);
  m(2, 2) = k_inf(b, b) - 2.0 * fe_inf(b, b) + 1.0 / (2.0 * b);
  m(1, 0) = m(0, 1);
  m(2, 0) = m(0, 2);
  m(2, 1) = m(1, 2);
  return m;
}

}  // namespace nss
