#include "nssortho/changepoint.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "nssortho/parallel.hpp"

namespace nss {

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x) {
  if (x.rows() < 2)
    throw std::invalid_argument("standardization needs >= 2 rows");
  Eigen::MatrixXd out = x;
  const double n = static_cast<double>(x.rows());
  for (long c = 0; c < x.cols(); ++c) {
    const double mu = x.col(c).mean();
    out.col(c).array() -= mu;
    const double sd = std::sqrt(out.col(c).squaredNorm() / (n - 1.0));
    if (sd > 0.0) out.col(c) /= sd;
  }
  return out;
}

namespace {

// Within-segment SSE from prefix sums of values and squares, clamped at
// zero against cancellation on constant segments.
struct SegmentCost {
  Eigen::MatrixXd sum;     // (T+1) x d
  Eigen::MatrixXd sum_sq;  // (T+1) x d

  explicit SegmentCost(const Eigen::MatrixXd& x)
      : sum(x.rows() + 1, x.cols()), sum_sq(x.rows() + 1, x.cols()) {
    sum.row(0).setZero();
    sum_sq.row(0).setZero();
    for (long t = 0; t < x.rows(); ++t) {
      sum.row(t + 1) = sum.row(t) + x.row(t);
      sum_sq.row(t + 1) = sum_sq.row(t) + x.row(t).cwiseAbs2();
    }
  }

  double operator()(long first, long last) const {  // inclusive range
    const double len = static_cast<double>(last - first + 1);
    double cost = 0.0;
    for (long c = 0; c < sum.cols(); ++c) {
      const double s = sum(last + 1, c) - sum(first, c);
      const double q = sum_sq(last + 1, c) - sum_sq(first, c);
      cost += std::max(0.0, q - s * s / len);
    }
    return cost;
  }
};

}  // namespace

long elbow_select(const std::vector<double>& cost_path) {
  const long n = static_cast<long>(cost_path.size());
  if (n == 0) throw std::invalid_argument("empty cost path");
  if (n < 3) return n - 1;

  const double zero_tol =
      1e-10 * std::max(cost_path[0], std::numeric_limits<double>::min());
  for (long i = 0; i < n; ++i)
    if (cost_path[i] <= zero_tol) return i;

  long best = 1;
  double best_curvature = -std::numeric_limits<double>::infinity();
  for (long i = 1; i + 1 < n; ++i) {
    const double curvature = std::log(cost_path[i - 1]) -
                             2.0 * std::log(cost_path[i]) +
                             std::log(cost_path[i + 1]);
    if (curvature > best_curvature) {
      best_curvature = curvature;
      best = i;
    }
  }
  return best;
}

Segmentation dp_segment(const Eigen::MatrixXd& x, long k_max) {
  const long t_len = x.rows();
  if (t_len < 1) throw std::invalid_argument("empty series");
  if (k_max < 0) throw std::invalid_argument("breakpoint count must be >= 0");
  if (k_max >= t_len)
    throw std::invalid_argument("breakpoint count must be below the length");

  const SegmentCost segcost(x);
  const long n_counts = k_max + 1;  // segments = breakpoints + 1

  // cost over 0..t with (k+1) segments; choice = start of the last segment
  Eigen::MatrixXd cost(n_counts, t_len);
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> choice(n_counts, t_len);
  for (long t = 0; t < t_len; ++t) {
    cost(0, t) = segcost(0, t);
    choice(0, t) = 0;
  }
  for (long k = 1; k < n_counts; ++k) {
    parallel_for(t_len, [&](long t) {
      if (t < k) {  // not enough points for k+1 nonempty segments
        cost(k, t) = std::numeric_limits<double>::infinity();
        choice(k, t) = -1;
        return;
      }
      double best = std::numeric_limits<double>::infinity();
      long best_s = -1;
      for (long s = k; s <= t; ++s) {
        const double c = cost(k - 1, s - 1) + segcost(s, t);
        if (c < best) {
          best = c;
          best_s = s;
        }
      }
      cost(k, t) = best;
      choice(k, t) = best_s;
    });
  }

  Segmentation seg;
  seg.cost_path.resize(n_counts);
  seg.breakpoints_per_k.resize(n_counts);
  for (long k = 0; k < n_counts; ++k) {
    seg.cost_path[k] = cost(k, t_len - 1);
    std::vector<long>& bps = seg.breakpoints_per_k[k];
    bps.resize(k);
    long t = t_len - 1;
    for (long j = k; j >= 1; --j) {
      const long s = choice(j, t);
      bps[j - 1] = s;
      t = s - 1;
    }
  }

  seg.k = elbow_select(seg.cost_path);
  seg.breakpoints = seg.breakpoints_per_k[seg.k];
  seg.sse = seg.cost_path[seg.k];
  return seg;
}

double segment_sse_at_k(const Eigen::MatrixXd& x, long k) {
  return dp_segment(x, k).cost_path[k];
}

}  // namespace nss
