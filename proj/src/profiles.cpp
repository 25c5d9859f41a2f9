#include "nssortho/profiles.hpp"

#include <cmath>
#include <limits>

#include "nssortho/parallel.hpp"
#include "nssortho/simplex.hpp"

namespace nss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& phi, int j) {
  Eigen::MatrixXd out(phi.rows(), phi.cols() - 1);
  int c = 0;
  for (int k = 0; k < phi.cols(); ++k)
    if (k != j) out.col(c++) = phi.col(k);
  return out;
}

// Component of phi_j orthogonal to the remaining columns.
Eigen::VectorXd perp_component(const Eigen::MatrixXd& phi, int j) {
  const Eigen::MatrixXd others = drop_column(phi, j);
  const Eigen::VectorXd coef = others.colPivHouseholderQr().solve(phi.col(j));
  return phi.col(j) - others * coef;
}

Eigen::Vector2d clamp_box(const Eigen::Vector2d& lambda, const LambdaBox& box) {
  Eigen::Vector2d out;
  for (int k = 0; k < 2; ++k)
    out(k) = std::min(std::max(lambda(k), box.lo(k)), box.hi(k));
  return out;
}

// Residual sum of squares with gamma_j pinned to v, everything else free
// given lambda. Orthonormality makes the other gammas separate exactly.
double pinned_gamma_rss(const Eigen::Vector2d& lambda, int j,
                        const MaturityGrid& grid, const Eigen::VectorXd& y,
                        double v) {
  const OrthoFactorization fact = thin_qr_positive(design_matrix(grid, lambda));
  const int p = fact.degenerate ? std::min(3, fact.degenerate_index) : 4;
  const auto psi = fact.psi.leftCols(p);
  const Eigen::VectorXd gamma = psi.transpose() * y;
  const double base = (y - psi * gamma).squaredNorm();
  if (j < p) {
    const double d = v - gamma(j);
    return base + d * d;
  }
  return base + v * v;  // pinned coordinate lies outside the span
}

// RSS with beta_j pinned to v: least squares of y - v*phi_j on the rest.
double pinned_beta_rss(const Eigen::Vector2d& lambda, int j,
                       const MaturityGrid& grid, const Eigen::VectorXd& y,
                       double v) {
  const Eigen::MatrixXd phi = design_matrix(grid, lambda).values;
  const Eigen::MatrixXd others = drop_column(phi, j);
  const Eigen::VectorXd target = y - v * phi.col(j);
  const Eigen::VectorXd coef = others.colPivHouseholderQr().solve(target);
  return (target - others * coef).squaredNorm();
}

}  // namespace

std::string param_name(const ParamId& id) {
  switch (id.kind) {
    case ParamKind::beta:
      return "beta" + std::to_string(id.index + 1);
    case ParamKind::gamma:
      return "gamma" + std::to_string(id.index + 1);
    case ParamKind::lambda:
      return "lambda" + std::to_string(id.index + 1);
  }
  return "?";
}

double chi2_quantile(int df, double level) {
  auto near = [&](double x) { return std::abs(level - x) < 1e-9; };
  if (df == 1) {
    if (near(0.90)) return 2.705543454095404;
    if (near(0.95)) return 3.841458820694124;
    if (near(0.99)) return 6.634896601021213;
  } else if (df == 2) {
    if (near(0.90)) return 4.605170185988091;
    if (near(0.95)) return 5.991464547107979;
    if (near(0.99)) return 9.21034037197618;
  }
  throw std::invalid_argument(
      "chi2_quantile supports df 1..2 at levels 0.90/0.95/0.99");
}

std::vector<double> profile_grid(double mle, double std, int n,
                                 double half_width_in_std) {
  if (n < 2) throw std::invalid_argument("profile grid needs >= 2 points");
  std::vector<double> v(n);
  const double lo = mle - half_width_in_std * std;
  const double hi = mle + half_width_in_std * std;
  for (int i = 0; i < n; ++i)
    v[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return v;
}

ProfileCurve conditional_profile_beta(int j, const DesignMatrix& phi,
                                      const Eigen::VectorXd& y, double sigma,
                                      const std::vector<double>& values) {
  if (j < 0 || j > 3) throw std::invalid_argument("beta index must be 0..3");
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");

  ProfileCurve curve;
  curve.param = ParamId{ParamKind::beta, j};
  curve.values = values;
  curve.conditional = true;
  curve.missing.assign(values.size(), false);

  const OrthoFactorization fact = thin_qr_positive(phi);
  const double col_norm = phi.values.col(j).norm();
  double perp_sq = 0.0;

  if (!fact.degenerate) {
    // ||phi_j perp||^{-2} is the j-th diagonal of (Phi^T Phi)^{-1} = R^{-1}R^{-T}
    const Eigen::Matrix4d rinv =
        fact.r.triangularView<Eigen::Upper>().solve(
            Eigen::Matrix4d::Identity());
    perp_sq = 1.0 / rinv.row(j).squaredNorm();
    curve.mle = recover_beta(fact, orthogonal_fit(fact, y), 4)(j);
  } else {
    const Eigen::VectorXd u = perp_component(phi.values, j);
    perp_sq = u.squaredNorm();
    if (perp_sq <= 1e-20 * col_norm * col_norm) {
      curve.flat = true;
      curve.mle = kNaN;
      curve.dnll.assign(values.size(), 0.0);
      return curve;
    }
    curve.mle = u.dot(y) / perp_sq;
  }

  curve.profile_std = sigma / std::sqrt(perp_sq);
  curve.vif = col_norm * col_norm / perp_sq;
  curve.uncorrelated_std = sigma / col_norm;
  curve.dnll.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - curve.mle;
    curve.dnll[i] = d * d * perp_sq / (2.0 * sigma * sigma);
  }
  return curve;
}

ProfileCurve conditional_profile_gamma(int j, const OrthoFactorization& fact,
                                       const Eigen::VectorXd& y, double sigma,
                                       const std::vector<double>& values) {
  if (j < 0 || j > 3) throw std::invalid_argument("gamma index must be 0..3");
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");

  ProfileCurve curve;
  curve.param = ParamId{ParamKind::gamma, j};
  curve.values = values;
  curve.conditional = true;
  curve.missing.assign(values.size(), false);
  curve.mle = orthogonal_fit(fact, y)(j);
  curve.profile_std = sigma;
  curve.dnll.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - curve.mle;
    curve.dnll[i] = d * d / (2.0 * sigma * sigma);
  }
  return curve;
}

ProfileCurve full_profile(const ParamId& param, const MaturityGrid& grid,
                          const Eigen::VectorXd& y, double sigma,
                          const std::vector<double>& values,
                          const LambdaBox& box, const OuterConfig& config) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  box.validate();

  const FullFit mle_fit = fit_global(grid, y, box, sigma, 10.0 * sigma, config);
  const double rss_mle = reduced_objective(mle_fit.lambda, grid, y);

  ProfileCurve curve;
  curve.param = param;
  curve.values = values;
  curve.conditional = false;
  curve.missing.assign(values.size(), false);
  curve.dnll.assign(values.size(), 0.0);

  const OrthoFactorization mle_fact =
      thin_qr_positive(design_matrix(grid, mle_fit.lambda));
  const Eigen::Vector4d gamma_hat = orthogonal_fit(mle_fact, y);
  switch (param.kind) {
    case ParamKind::beta:
      curve.mle = mle_fact.degenerate
                      ? kNaN
                      : recover_beta(mle_fact, gamma_hat, 4)(param.index);
      break;
    case ParamKind::gamma:
      curve.mle = gamma_hat(param.index);
      break;
    case ParamKind::lambda:
      curve.mle = mle_fit.lambda(param.index);
      break;
  }

  // Minimized RSS at one pinned target value, warm-started on lambda.
  auto profile_point = [&](double v, const Eigen::Vector2d& warm,
                           Eigen::Vector2d& lambda_out) -> double {
    if (param.kind == ParamKind::lambda) {
      const int free_idx = 1 - param.index;
      auto objective = [&](const Eigen::VectorXd& u) {
        Eigen::Vector2d lambda;
        lambda(param.index) = v;
        lambda(free_idx) = std::exp(u(0));
        return reduced_objective(clamp_box(lambda, box), grid, y);
      };
      Eigen::VectorXd u0(1);
      u0 << std::log(warm(free_idx));
      const auto res =
          detail::nelder_mead(objective, u0, 0.05, config.simplex_tolerance,
                              config.max_simplex_iterations);
      lambda_out = warm;
      lambda_out(param.index) = v;
      lambda_out(free_idx) = std::min(
          std::max(std::exp(res.x(0)), box.lo(free_idx)), box.hi(free_idx));
      return res.value;
    }

    auto rss_at = [&](const Eigen::Vector2d& lambda) {
      return param.kind == ParamKind::beta
                 ? pinned_beta_rss(lambda, param.index, grid, y, v)
                 : pinned_gamma_rss(lambda, param.index, grid, y, v);
    };
    auto objective = [&](const Eigen::VectorXd& u) {
      Eigen::Vector2d lambda(std::exp(u(0)), std::exp(u(1)));
      return rss_at(clamp_box(lambda, box));
    };
    Eigen::VectorXd u0(2);
    u0 << std::log(warm(0)), std::log(warm(1));
    const auto res =
        detail::nelder_mead(objective, u0, 0.05, config.simplex_tolerance,
                            config.max_simplex_iterations);
    lambda_out = clamp_box(
        Eigen::Vector2d(std::exp(res.x(0)), std::exp(res.x(1))), box);
    return res.value;
  };

  // Walk outward from the grid point nearest the MLE so each point warm
  // starts from its neighbor.
  std::size_t center = 0;
  if (std::isfinite(curve.mle)) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double d = std::abs(values[i] - curve.mle);
      if (d < best) {
        best = d;
        center = i;
      }
    }
  }

  auto run_direction = [&](std::ptrdiff_t from, std::ptrdiff_t to,
                           std::ptrdiff_t step) {
    Eigen::Vector2d warm = mle_fit.lambda;
    for (std::ptrdiff_t i = from; i != to; i += step) {
      Eigen::Vector2d lam;
      const double rss = profile_point(values[i], warm, lam);
      if (!std::isfinite(rss)) {
        curve.missing[i] = true;
        curve.dnll[i] = kNaN;
        continue;
      }
      warm = lam;
      curve.dnll[i] = (rss - rss_mle) / (2.0 * sigma * sigma);
    }
  };
  run_direction(static_cast<std::ptrdiff_t>(center),
                static_cast<std::ptrdiff_t>(values.size()), 1);
  run_direction(static_cast<std::ptrdiff_t>(center) - 1, -1, -1);

  double lowest = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!curve.missing[i]) lowest = std::min(lowest, curve.dnll[i]);
  if (lowest < 0.0)
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!curve.missing[i]) curve.dnll[i] -= lowest;

  return curve;
}

IntervalSet confidence_interval(const ProfileCurve& curve, double level) {
  const double threshold = 0.5 * chi2_quantile(1, level);
  IntervalSet out;
  const auto& v = curve.values;
  const auto& d = curve.dnll;
  if (v.empty()) {
    out.unbounded = curve.flat;
    return out;
  }
  if (curve.flat) {
    out.intervals.emplace_back(v.front(), v.back());
    out.unbounded = true;
    return out;
  }

  auto usable = [&](std::size_t i) {
    return (curve.missing.empty() || !curve.missing[i]) && std::isfinite(d[i]);
  };
  auto below = [&](std::size_t i) { return usable(i) && d[i] <= threshold; };
  auto cross = [&](std::size_t a, std::size_t b) {
    return v[a] + (threshold - d[a]) * (v[b] - v[a]) / (d[b] - d[a]);
  };

  bool open = false;
  double lo = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (below(i) && !open) {
      open = true;
      if (i == 0 || !usable(i - 1)) {
        lo = v[i];
        if (i == 0) out.unbounded = true;
      } else {
        lo = cross(i - 1, i);
      }
    } else if (!below(i) && open) {
      open = false;
      const double hi = usable(i) ? cross(i - 1, i) : v[i - 1];
      out.intervals.emplace_back(lo, hi);
    }
  }
  if (open) {
    out.intervals.emplace_back(lo, v.back());
    out.unbounded = true;
  }
  if (out.intervals.empty()) out.unbounded = true;  // never crossed below
  return out;
}

Landscape2D landscape_2d(LandscapePair pair, const MaturityGrid& grid,
                         const Eigen::VectorXd& y, double sigma,
                         const Eigen::Vector2d& lambda,
                         const LandscapeRanges& ranges) {
  if (!(sigma > 0.0)) throw std::domain_error("sigma must be positive");
  Landscape2D land;
  land.pair = pair;
  land.axis1.resize(ranges.n1);
  land.axis2.resize(ranges.n2);
  for (int i = 0; i < ranges.n1; ++i)
    land.axis1[i] = ranges.lo(0) + (ranges.hi(0) - ranges.lo(0)) *
                                       static_cast<double>(i) /
                                       std::max(1, ranges.n1 - 1);
  for (int i = 0; i < ranges.n2; ++i)
    land.axis2[i] = ranges.lo(1) + (ranges.hi(1) - ranges.lo(1)) *
                                       static_cast<double>(i) /
                                       std::max(1, ranges.n2 - 1);
  land.dnll.resize(ranges.n1, ranges.n2);
  land.profile1.resize(ranges.n1);
  land.profile2.resize(ranges.n2);

  const double two_s2 = 2.0 * sigma * sigma;

  if (pair == LandscapePair::gamma34) {
    const OrthoFactorization fact =
        thin_qr_positive(design_matrix(grid, lambda));
    const Eigen::Vector4d gamma = orthogonal_fit(fact, y);
    land.mle = Eigen::Vector2d(gamma(2), gamma(3));
    for (int i = 0; i < ranges.n1; ++i) {
      const double du = land.axis1[i] - gamma(2);
      land.profile1[i] = du * du / two_s2;
      for (int k = 0; k < ranges.n2; ++k) {
        const double dv = land.axis2[k] - gamma(3);
        land.dnll(i, k) = (du * du + dv * dv) / two_s2;
      }
    }
    for (int k = 0; k < ranges.n2; ++k) {
      const double dv = land.axis2[k] - gamma(3);
      land.profile2[k] = dv * dv / two_s2;
    }
    return land;
  }

  const Eigen::MatrixXd phi = design_matrix(grid, lambda).values;
  const OrthoFactorization fact = thin_qr_positive(phi);
  const Eigen::Vector4d beta_hat =
      recover_beta(fact, orthogonal_fit(fact, y), 4);
  land.mle = Eigen::Vector2d(beta_hat(2), beta_hat(3));
  const double rss_min = (y - phi * beta_hat).squaredNorm();

  // With (beta3, beta4) fixed, the best beta1, beta2 only see the residual
  // after projecting onto {phi1, phi2}; precompute that projector's action.
  const Eigen::MatrixXd phi12 = phi.leftCols(2);
  const auto qr12 = phi12.colPivHouseholderQr();
  auto deflate12 = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return x - phi12 * qr12.solve(x);
  };
  const Eigen::VectorXd y12 = deflate12(y);
  const Eigen::VectorXd a = deflate12(phi.col(2));
  const Eigen::VectorXd b = deflate12(phi.col(3));

  parallel_for(ranges.n1, [&](long i) {
    for (int k = 0; k < ranges.n2; ++k) {
      const Eigen::VectorXd r = y12 - land.axis1[i] * a - land.axis2[k] * b;
      land.dnll(i, k) = (r.squaredNorm() - rss_min) / two_s2;
    }
  });

  // Exact profile paths: minimize over the other of the pair as well.
  auto profile_against = [&](int fixed_col, int free_col,
                             const std::vector<double>& axis,
                             std::vector<double>& out) {
    Eigen::MatrixXd basis(phi.rows(), 3);
    basis.col(0) = phi.col(0);
    basis.col(1) = phi.col(1);
    basis.col(2) = phi.col(free_col);
    const auto qr = basis.colPivHouseholderQr();
    auto deflate = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return x - basis * qr.solve(x);
    };
    const Eigen::VectorXd w = deflate(y);
    const Eigen::VectorXd z = deflate(phi.col(fixed_col));
    for (std::size_t i = 0; i < axis.size(); ++i) {
      const Eigen::VectorXd r = w - axis[i] * z;
      out[i] = (r.squaredNorm() - rss_min) / two_s2;
    }
  };
  profile_against(2, 3, land.axis1, land.profile1);
  profile_against(3, 2, land.axis2, land.profile2);

  return land;
}

}  // namespace nss
