#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

namespace nss::detail {

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  long evaluations = 0;
};

// Nelder-Mead with standard coefficients (reflect 1, expand 2, contract 0.5,
// shrink 0.5), terminating when the simplex diameter falls below tol. The
// best point ever evaluated is returned, so the result never regresses
// below the starting value.
template <typename F>
SimplexResult nelder_mead(F&& f, const Eigen::VectorXd& x0, double init_step,
                          double tol, int max_iterations) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  long evals = 0;

  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };

  for (int i = 1; i <= n; ++i) xs[i](i - 1) += init_step;
  for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

  Eigen::VectorXd best_x = xs[0];
  double best_f = fs[0];
  auto note = [&](const Eigen::VectorXd& x, double v) {
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  };
  for (int i = 0; i <= n; ++i) note(xs[i], fs[i]);

  std::vector<int> order(n + 1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fs[a] < fs[b]; });

    double diameter = 0.0;
    for (int i = 1; i <= n; ++i)
      diameter = std::max(diameter, (xs[order[i]] - xs[order[0]]).norm());
    if (diameter < tol) break;

    const int iw = order[n];       // worst
    const int is = order[n - 1];   // second worst
    const int ib = order[0];       // best

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[order[i]];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[iw]);
    const double fr = eval(xr);
    note(xr, fr);

    if (fr < fs[ib]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - xs[iw]);
      const double fe = eval(xe);
      note(xe, fe);
      if (fe < fr) {
        xs[iw] = xe;
        fs[iw] = fe;
      } else {
        xs[iw] = xr;
        fs[iw] = fr;
      }
    } else if (fr < fs[is]) {
      xs[iw] = xr;
      fs[iw] = fr;
    } else {
      const bool outside = fr < fs[iw];
      Eigen::VectorXd xc = centroid;
      if (outside)
        xc += 0.5 * (xr - centroid);
      else
        xc -= 0.5 * (centroid - xs[iw]);
      const double fc = eval(xc);
      note(xc, fc);
      if (fc < (outside ? fr : fs[iw])) {
        xs[iw] = xc;
        fs[iw] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == ib) continue;
          xs[i] = xs[ib] + 0.5 * (xs[i] - xs[ib]);
          fs[i] = eval(xs[i]);
          note(xs[i], fs[i]);
        }
      }
    }
  }

  return SimplexResult{best_x, best_f, evals};
}

}  // namespace nss::detail
