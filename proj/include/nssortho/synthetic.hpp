#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nssortho/core.hpp"

namespace nss {

// Canonical curve shapes used for simulation studies and demos.
enum class Regime {
  normal,
  flat,
  inverted,
  humped,
  double_humped,
  near_degenerate,
  small_lambda,
  large_lambda,
};

NssParams regime_params(Regime regime);
std::string regime_name(Regime regime);

struct SyntheticCurve {
  MaturityGrid grid;
  NssParams truth;
  Eigen::VectorXd y_true;
  Eigen::VectorXd y;  // y_true plus iid Gaussian noise
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

SyntheticCurve generate(Regime regime, double sigma, std::uint64_t seed);
SyntheticCurve generate(const NssParams& truth, const MaturityGrid& grid,
                        double sigma, std::uint64_t seed);

// One row of the conditioning study: raw-basis condition number, the
// fourth orthonormal pivot, per-coefficient standard errors at noise level
// sigma, and the worst off-diagonal correlation of the raw coefficients.
struct Table1Row {
  std::string label;
  double lambda2 = 0.0;
  double kappa = 0.0;
  double r44 = 0.0;
  Eigen::Vector4d std_beta = Eigen::Vector4d::Zero();
  double std_gamma = 0.0;
  double max_abs_corr = 0.0;
};

std::vector<Table1Row> table1_report(double sigma);

struct SweepRow {
  double lambda2 = 0.0;
  double r44 = 0.0;
  double kappa = 0.0;
};

// r44 and kappa as lambda2 sweeps a range at fixed lambda1.
std::vector<SweepRow> r44_sweep(double lambda1, double lo, double hi, int n);

struct ConditionMap {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  Eigen::MatrixXd log10_kappa;  // NaN on the exact diagonal
};

ConditionMap condition_map(const MaturityGrid& grid, double lo, double hi,
                           int n);

struct BasisCurves {
  std::vector<double> taus;
  Eigen::MatrixXd raw;    // basis functions evaluated on the dense grid
  Eigen::MatrixXd ortho;  // orthonormalized counterparts
};

BasisCurves basis_curves(const Eigen::Vector2d& lambda, double max_tau = 30.0,
                         int n = 600);

}  // namespace nss
