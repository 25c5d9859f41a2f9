#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace nss {

// Euler-Mascheroni, 20 significant digits.
inline constexpr double kEulerGamma = 0.57721566490153286061;

// E_1(x) = int_x^inf e^{-u}/u du. Power series for x <= 1, modified Lentz
// continued fraction for x > 1; relative error <= 1e-12 on [1e-3, 50].
double exp_integral_e1(double x);

namespace detail {
double e1_series(double x);
double e1_continued_fraction(double x);
}  // namespace detail

struct HelperIntegrals {
  double i;   // I_T(a)  = int_0^T e^{-a tau} dtau
  double f;   // F_T(a)  = int_0^T (1-e^{-a tau})/(a tau) dtau
  double fe;  // FE_T(a,b) = int_0^T (1-e^{-a tau})/(a tau) e^{-b tau} dtau
  double k;   // K_T(a,b) = int_0^T (1-e^{-a tau})(1-e^{-b tau})/(ab tau^2) dtau
};

HelperIntegrals helper_integrals(double a, double b, double T);

struct GramMatrix {
  Eigen::Matrix4d g;
  double horizon;
  Eigen::Vector2d lambda;
};

// Continuous Gram of {1, f(l1 tau), f(l1 tau)-e^{-l1 tau}, f(l2 tau)-e^{-l2 tau}}
// on [0, T], assembled from the closed forms above.
GramMatrix gram_matrix(const Eigen::Vector2d& lambda, double horizon);

struct ContinuousBasis {
  Eigen::Matrix4d l;    // lower Cholesky factor of G
  Eigen::Matrix4d r_t;  // L^T; (R_T)_44 is the continuous diagnostic
  Eigen::Vector2d lambda;
  double horizon;
  bool degenerate = false;   // Gram not SPD (lambda1 == lambda2)
  int zero_pivot_index = -1; // first non-positive Cholesky pivot
};

ContinuousBasis continuous_basis(const Eigen::Vector2d& lambda, double horizon);

// T -> infinity limit of the lower-right 3x3 block (the decaying subspace).
Eigen::Matrix3d decaying_gram_infinite(const Eigen::Vector2d& lambda);

}  // namespace nss
