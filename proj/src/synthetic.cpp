#include "nssortho/synthetic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nssortho/covariance.hpp"
#include "nssortho/parallel.hpp"
#include "nssortho/qr.hpp"
#include "nssortho/rng.hpp"

namespace nss {

NssParams regime_params(Regime regime) {
  NssParams p;
  switch (regime) {
    case Regime::normal:
      p.beta << 0.04, -0.02, 0.015, 0.008;
      p.lambda << 0.6, 0.2;
      break;
    case Regime::flat:
      p.beta << 0.03, -0.002, 0.001, 0.0005;
      p.lambda << 0.6, 0.3;
      break;
    case Regime::inverted:
      p.beta << 0.03, 0.02, -0.01, -0.005;
      p.lambda << 0.5, 0.25;
      break;
    case Regime::humped:
      p.beta << 0.035, -0.01, 0.04, 0.0;
      p.lambda << 0.8, 0.4;
      break;
    case Regime::double_humped:
      p.beta << 0.035, -0.015, 0.03, -0.02;
      p.lambda << 1.2, 0.25;
      break;
    case Regime::near_degenerate:
      p.beta << 0.04, -0.02, 0.015, 0.008;
      p.lambda << 0.6, 0.55;
      break;
    case Regime::small_lambda:
      p.beta << 0.04, -0.02, 0.015, 0.008;
      p.lambda << 0.08, 0.04;
      break;
    case Regime::large_lambda:
      p.beta << 0.04, -0.02, 0.015, 0.008;
      p.lambda << 3.0, 1.5;
      break;
    default:
      throw std::invalid_argument("unknown regime");
  }
  return p;
}

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::normal:
      return "normal";
    case Regime::flat:
      return "flat";
    case Regime::inverted:
      return "inverted";
    case Regime::humped:
      return "humped";
    case Regime::double_humped:
      return "double_humped";
    case Regime::near_degenerate:
      return "near_degenerate";
    case Regime::small_lambda:
      return "small_lambda";
    case Regime::large_lambda:
      return "large_lambda";
  }
  return "?";
}

SyntheticCurve generate(const NssParams& truth, const MaturityGrid& grid,
                        double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::domain_error("sigma must be >= 0");
  SyntheticCurve out{grid, truth, Eigen::VectorXd(), Eigen::VectorXd(), sigma,
                     seed};
  out.y_true = design_matrix(grid, truth.lambda).values * truth.beta;
  out.y = out.y_true;
  if (sigma > 0.0) {
    Rng rng(seed);
    for (long i = 0; i < out.y.size(); ++i) out.y(i) += sigma * rng.normal();
  }
  return out;
}

SyntheticCurve generate(Regime regime, double sigma, std::uint64_t seed) {
  return generate(regime_params(regime), MaturityGrid::us_treasury_12(),
                  sigma, seed);
}

std::vector<Table1Row> table1_report(double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const double lambda1 = 0.6;
  const std::vector<std::pair<std::string, double>> cases = {
      {"well_separated", 0.2},
      {"moderate", 0.4},
      {"near_degenerate", 0.55},
      {"very_degenerate", 0.59},
  };

  std::vector<Table1Row> rows;
  rows.reserve(cases.size());
  for (const auto& [label, lambda2] : cases) {
    const DesignMatrix phi =
        design_matrix(grid, Eigen::Vector2d(lambda1, lambda2));
    const OrthoFactorization fact = thin_qr_positive(phi);
    const ConditionalBetaCov cov = conditional_beta_cov(phi, sigma);

    Table1Row row;
    row.label = label;
    row.lambda2 = lambda2;
    row.kappa = condition_number(phi);
    row.r44 = std::abs(fact.r(3, 3));
    row.std_beta = cov.cov.diagonal().cwiseSqrt();
    row.std_gamma = sigma;
    row.max_abs_corr = cov.max_abs_offdiag_corr;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> r44_sweep(double lambda1, double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("sweep needs >= 2 points");
  if (!(lo > 0.0) || !(hi > lo))
    throw std::invalid_argument("sweep range must satisfy 0 < lo < hi");
  const MaturityGrid grid = MaturityGrid::us_treasury_12();

  std::vector<SweepRow> rows(n);
  parallel_for(n, [&](long i) {
    const double lambda2 =
        lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    const DesignMatrix phi =
        design_matrix(grid, Eigen::Vector2d(lambda1, lambda2));
    const OrthoFactorization fact = thin_qr_positive(phi);
    rows[i].lambda2 = lambda2;
    rows[i].r44 = std::abs(fact.r(3, 3));
    rows[i].kappa = condition_number(phi);
  });
  return rows;
}

ConditionMap condition_map(const MaturityGrid& grid, double lo, double hi,
                           int n) {
  if (n < 2) throw std::invalid_argument("map needs >= 2 points per side");
  if (!(lo > 0.0) || !(hi > lo))
    throw std::invalid_argument("map range must satisfy 0 < lo < hi");

  ConditionMap map;
  map.lambda1.resize(n);
  map.lambda2.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    map.lambda1[i] = v;
    map.lambda2[i] = v;
  }
  map.log10_kappa.resize(n, n);
  parallel_for(n, [&](long i) {
    for (int j = 0; j < n; ++j) {
      if (map.lambda1[i] == map.lambda2[j]) {
        map.log10_kappa(i, j) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const DesignMatrix phi = design_matrix(
          grid, Eigen::Vector2d(map.lambda1[i], map.lambda2[j]));
      map.log10_kappa(i, j) = std::log10(condition_number(phi));
    }
  });
  return map;
}

BasisCurves basis_curves(const Eigen::Vector2d& lambda, double max_tau,
                         int n) {
  check_lambda(lambda);
  if (n < 4) throw std::invalid_argument("need at least 4 grid points");
  if (!(max_tau > 0.0)) throw std::domain_error("max maturity must be > 0");

  BasisCurves out;
  out.taus.resize(n);
  for (int i = 0; i < n; ++i)
    out.taus[i] = max_tau * static_cast<double>(i + 1) / n;

  const MaturityGrid grid(out.taus);
  const DesignMatrix phi = design_matrix(grid, lambda);
  const OrthoFactorization fact = thin_qr_positive(phi);
  out.raw = phi.values;
  out.ortho = fact.psi;
  return out;
}

}  // namespace nss
