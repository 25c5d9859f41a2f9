#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "nssortho/core.hpp"
#include "nssortho/qr.hpp"
#include "nssortho/varpro.hpp"

namespace nss {

enum class ParamKind { beta, gamma, lambda };

struct ParamId {
  ParamKind kind;
  int index;  // 0-based within kind (beta/gamma: 0..3, lambda: 0..1)
};

std::string param_name(const ParamId& id);

struct ProfileCurve {
  ParamId param;
  std::vector<double> values;
  std::vector<double> dnll;
  std::vector<bool> missing;  // inner optimization failed at this point
  bool conditional = true;
  double mle = 0.0;
  std::optional<double> profile_std;
  bool flat = false;  // non-identifiable direction, dnll identically zero
  // VIF decomposition for conditional beta profiles:
  std::optional<double> vif;
  std::optional<double> uncorrelated_std;  // sigma / ||phi_j||
};

struct IntervalSet {
  std::vector<std::pair<double, double>> intervals;
  bool unbounded = false;
};

// chi^2 quantiles, hard-coded for 1 and 2 degrees of freedom.
double chi2_quantile(int df, double level);

// Exact quadratic profile: dNLL = (v - beta_hat_j)^2 ||phi_j_perp||^2/(2 s^2).
ProfileCurve conditional_profile_beta(int j, const DesignMatrix& phi,
                                      const Eigen::VectorXd& y, double sigma,
                                      const std::vector<double>& values);

// dNLL = (v - gamma_hat_j)^2 / (2 sigma^2), curvature independent of lambda.
ProfileCurve conditional_profile_gamma(int j, const OrthoFactorization& fact,
                                       const Eigen::VectorXd& y, double sigma,
                                       const std::vector<double>& values);

// Re-optimizes every other parameter (including lambda) at each target value.
ProfileCurve full_profile(const ParamId& param, const MaturityGrid& grid,
                          const Eigen::VectorXd& y, double sigma,
                          const std::vector<double>& values,
                          const LambdaBox& box = {},
                          const OuterConfig& config = {});

IntervalSet confidence_interval(const ProfileCurve& curve, double level);

enum class LandscapePair { beta34, gamma34 };

struct LandscapeRanges {
  Eigen::Vector2d lo;
  Eigen::Vector2d hi;
  int n1 = 201;
  int n2 = 201;
};

struct Landscape2D {
  LandscapePair pair;
  std::vector<double> axis1;
  std::vector<double> axis2;
  Eigen::MatrixXd dnll;          // axis1.size() x axis2.size()
  std::vector<double> profile1;  // exact profile along axis1
  std::vector<double> profile2;
  Eigen::Vector2d mle;
};

// Conditional (fixed lambda) dNLL surface over (beta3, beta4) or
// (gamma3, gamma4), remaining linear parameters profiled out.
Landscape2D landscape_2d(LandscapePair pair, const MaturityGrid& grid,
                         const Eigen::VectorXd& y, double sigma,
                         const Eigen::Vector2d& lambda,
                         const LandscapeRanges& ranges);

// Default grid for profiles: mle +/- 5 std, 201 points.
std::vector<double> profile_grid(double mle, double std, int n = 201,
                                 double half_width_in_std = 5.0);

}  // namespace nss
