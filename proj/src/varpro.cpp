#include "nssortho/varpro.hpp"

#include <cmath>
#include <tuple>
#include <vector>

#include "nssortho/parallel.hpp"
#include "nssortho/simplex.hpp"

namespace nss {

namespace {

struct ReducedEval {
  double h;
  bool degenerate;
};

ReducedEval reduced_eval(const Eigen::Vector2d& lambda,
                         const MaturityGrid& grid, const Eigen::VectorXd& y) {
  const DesignMatrix phi = design_matrix(grid, lambda);
  const OrthoFactorization fact = thin_qr_positive(phi);
  const int p = fact.degenerate ? std::min(3, fact.degenerate_index) : 4;
  const auto psi = fact.psi.leftCols(p);
  const Eigen::VectorXd r = y - psi * (psi.transpose() * y);
  return ReducedEval{r.squaredNorm(), fact.degenerate};
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = lo;
    return g;
  }
  const double llo = std::log(lo);
  const double lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (n - 1));
  return g;
}

Eigen::Vector2d clamp_to_box(const Eigen::Vector2d& lambda,
                             const LambdaBox& box) {
  Eigen::Vector2d out;
  for (int j = 0; j < 2; ++j)
    out(j) = std::min(std::max(lambda(j), box.lo(j)), box.hi(j));
  return out;
}

struct PolishResult {
  Eigen::Vector2d lambda;
  double h;
  long evals;
};

PolishResult polish(const Eigen::Vector2d& start, const MaturityGrid& grid,
                    const Eigen::VectorXd& y, const LambdaBox& box,
                    const OuterConfig& config) {
  auto objective = [&](const Eigen::VectorXd& u) {
    Eigen::Vector2d lambda(std::exp(u(0)), std::exp(u(1)));
    return reduced_eval(clamp_to_box(lambda, box), grid, y).h;
  };
  Eigen::VectorXd u0(2);
  u0 << std::log(start(0)), std::log(start(1));
  const detail::SimplexResult res =
      detail::nelder_mead(objective, u0, 0.05, config.simplex_tolerance,
                          config.max_simplex_iterations);
  Eigen::Vector2d lambda(std::exp(res.x(0)), std::exp(res.x(1)));
  return PolishResult{clamp_to_box(lambda, box), res.value, res.evaluations};
}

struct CoarseScan {
  std::vector<Eigen::Vector2d> points;  // ranked best-first
  std::vector<double> h;                // aligned with points
  long evals;
};

// Scans the log-spaced coarse grid and ranks all points by (H, l1, l2).
CoarseScan coarse_scan(const MaturityGrid& grid, const Eigen::VectorXd& y,
                       const LambdaBox& box, const OuterConfig& config) {
  const int res = config.coarse_resolution;
  const std::vector<double> g1 = log_spaced(box.lo(0), box.hi(0), res);
  const std::vector<double> g2 = log_spaced(box.lo(1), box.hi(1), res);
  const long total = static_cast<long>(res) * res;

  std::vector<double> h(total);
  std::vector<char> degen(total);
  parallel_for(total, [&](long idx) {
    const Eigen::Vector2d lambda(g1[idx / res], g2[idx % res]);
    const ReducedEval ev = reduced_eval(lambda, grid, y);
    h[idx] = ev.h;
    degen[idx] = ev.degenerate ? 1 : 0;
  });

  bool any_nondegenerate = false;
  for (long i = 0; i < total; ++i)
    if (!degen[i]) {
      any_nondegenerate = true;
      break;
    }
  if (!any_nondegenerate)
    throw OptimizationFailedError(
        "every coarse-grid point is degenerate; widen the lambda box");

  std::vector<long> order(total);
  for (long i = 0; i < total; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    const double la1 = g1[a / res], la2 = g2[a % res];
    const double lb1 = g1[b / res], lb2 = g2[b % res];
    return std::tie(h[a], la1, la2) < std::tie(h[b], lb1, lb2);
  });

  CoarseScan scan;
  scan.evals = total;
  scan.points.reserve(total);
  scan.h.reserve(total);
  for (long i = 0; i < total; ++i) {
    const long idx = order[i];
    scan.points.emplace_back(g1[idx / res], g2[idx % res]);
    scan.h.push_back(h[idx]);
  }
  return scan;
}

// Polishes from the top-ranked coarse points and keeps the best outcome.
// A single start is not enough: secondary valleys of H can beat the true
// basin at coarse resolution.
PolishResult polish_from_scan(const CoarseScan& scan, const MaturityGrid& grid,
                              const Eigen::VectorXd& y, const LambdaBox& box,
                              const OuterConfig& config) {
  const int starts =
      std::min<int>(config.polish_starts, static_cast<int>(scan.points.size()));
  std::vector<PolishResult> results(starts);
  parallel_for(starts, [&](long i) {
    results[i] = polish(scan.points[i], grid, y, box, config);
  });

  int best = 0;
  for (int i = 1; i < starts; ++i) {
    const auto& a = results[i];
    const auto& b = results[best];
    if (std::tie(a.h, a.lambda(0), a.lambda(1)) <
        std::tie(b.h, b.lambda(0), b.lambda(1)))
      best = i;
  }
  PolishResult out = results[best];
  for (int i = 0; i < starts; ++i)
    if (i != best) out.evals += results[i].evals;
  return out;
}

FullFit assemble(const Eigen::Vector2d& lambda, const MaturityGrid& grid,
                 const Eigen::VectorXd& y, double sigma, double delta,
                 long evals, bool used_warm_start) {
  FullFit fit;
  fit.lambda = lambda;
  fit.inner = inner_step(grid, y, lambda, sigma, delta);
  fit.objective = fit.inner.residual_norm * fit.inner.residual_norm;
  fit.iterations = evals;
  fit.used_warm_start = used_warm_start;
  return fit;
}

}  // namespace

double reduced_objective(const Eigen::Vector2d& lambda,
                         const MaturityGrid& grid, const Eigen::VectorXd& y) {
  if (y.size() != static_cast<Eigen::Index>(grid.size()))
    throw std::invalid_argument("observation vector length mismatch");
  return reduced_eval(lambda, grid, y).h;
}

FullFit fit_global(const MaturityGrid& grid, const Eigen::VectorXd& y,
                   const LambdaBox& box, double sigma, double delta,
                   const OuterConfig& config) {
  box.validate();
  if (y.size() != static_cast<Eigen::Index>(grid.size()))
    throw std::invalid_argument("observation vector length mismatch");
  const CoarseScan scan = coarse_scan(grid, y, box, config);
  const PolishResult best = polish_from_scan(scan, grid, y, box, config);
  return assemble(best.lambda, grid, y, sigma, delta, scan.evals + best.evals,
                  false);
}

FullFit fit_warm(const MaturityGrid& grid, const Eigen::VectorXd& y,
                 const Eigen::Vector2d& prev_lambda, const LambdaBox& box,
                 double sigma, double delta, const OuterConfig& config) {
  box.validate();
  if (y.size() != static_cast<Eigen::Index>(grid.size()))
    throw std::invalid_argument("observation vector length mismatch");
  if (!box.contains(prev_lambda))
    throw std::domain_error("warm-start lambda outside the box");

  const PolishResult local = polish(prev_lambda, grid, y, box, config);
  const CoarseScan scan = coarse_scan(grid, y, box, config);

  if (local.h > config.warm_fallback_factor * scan.h.front()) {
    const PolishResult global = polish_from_scan(scan, grid, y, box, config);
    return assemble(global.lambda, grid, y, sigma, delta,
                    local.evals + scan.evals + global.evals, false);
  }
  return assemble(local.lambda, grid, y, sigma, delta,
                  local.evals + scan.evals, true);
}

}  // namespace nss
