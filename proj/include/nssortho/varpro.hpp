#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "nssortho/core.hpp"
#include "nssortho/qr.hpp"

namespace nss {

struct LambdaBox {
  Eigen::Vector2d lo{0.02, 0.02};
  Eigen::Vector2d hi{5.0, 5.0};

  void validate() const {
    for (int j = 0; j < 2; ++j)
      if (!(lo(j) > 0.0) || !(lo(j) < hi(j)))
        throw std::domain_error("lambda box requires 0 < lo < hi");
  }

  bool contains(const Eigen::Vector2d& lambda) const {
    return lambda(0) >= lo(0) && lambda(0) <= hi(0) && lambda(1) >= lo(1) &&
           lambda(1) <= hi(1);
  }
};

struct FullFit {
  Eigen::Vector2d lambda;
  InnerFit inner;
  double objective = 0.0;  // H(lambda) at the optimum
  long iterations = 0;     // total reduced-objective evaluations
  bool used_warm_start = false;
};

struct OuterConfig {
  int coarse_resolution = 25;     // per axis, log-spaced over the box
  int polish_starts = 5;          // simplex polish from the best k grid points
  double simplex_tolerance = 1e-8;
  int max_simplex_iterations = 400;
  double warm_fallback_factor = 1.5;
};

class OptimizationFailedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// H(lambda) = ||y - Psi Psi^T y||^2. When the factorization is degenerate
// (lambda1 == lambda2) the projection uses only the leading 3 columns: the
// fourth adds no span and its computed Q column is roundoff noise.
double reduced_objective(const Eigen::Vector2d& lambda,
                         const MaturityGrid& grid, const Eigen::VectorXd& y);

FullFit fit_global(const MaturityGrid& grid, const Eigen::VectorXd& y,
                   const LambdaBox& box, double sigma, double delta,
                   const OuterConfig& config = {});

FullFit fit_warm(const MaturityGrid& grid, const Eigen::VectorXd& y,
                 const Eigen::Vector2d& prev_lambda, const LambdaBox& box,
                 double sigma, double delta, const OuterConfig& config = {});

}  // namespace nss
