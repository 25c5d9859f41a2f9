#pragma once

#include <vector>

#include <Eigen/Dense>

namespace nss {

// Center each column and scale by its sample standard deviation; columns
// with zero variance keep scale one.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x);

struct Segmentation {
  // Selected number of breakpoints and the row index starting each new
  // segment (ascending, never 0).
  long k = 0;
  std::vector<long> breakpoints;
  double sse = 0.0;
  // cost_path[b] = best total within-segment SSE using b breakpoints.
  std::vector<double> cost_path;
  // breakpoints_per_k[b] = optimal breakpoints when exactly b are used.
  std::vector<std::vector<long>> breakpoints_per_k;
};

// Optimal least-squares segmentation of a multivariate series (rows are
// time) for every breakpoint count 0..k_max, by dynamic programming over
// prefix sums. The reported k is picked by elbow_select on the cost path.
Segmentation dp_segment(const Eigen::MatrixXd& x, long k_max);

// Picks the breakpoint count at the sharpest elbow of the cost path:
// the largest second difference of log costs over interior points, ties to
// the smaller count. A (numerically) zero cost short-circuits to the first
// count that achieves it; paths too short for curvature return the largest
// count available.
long elbow_select(const std::vector<double>& cost_path);

// Best SSE with exactly k breakpoints (a convenience wrapper).
double segment_sse_at_k(const Eigen::MatrixXd& x, long k);

}  // namespace nss
