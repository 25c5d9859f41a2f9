#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace nss {

// Maturities in years, strictly increasing, all positive.
class MaturityGrid {
 public:
  explicit MaturityGrid(std::vector<double> taus) : taus_(std::move(taus)) {
    if (taus_.empty()) throw std::domain_error("maturity grid is empty");
    double prev = 0.0;
    for (double t : taus_) {
      if (!(t > prev))
        throw std::domain_error(
            "maturities must be positive and strictly increasing");
      prev = t;
    }
  }

  std::size_t size() const { return taus_.size(); }
  double operator[](std::size_t i) const { return taus_[i]; }
  const std::vector<double>& taus() const { return taus_; }

  // 1M 2M 3M 6M 1Y 2Y 3Y 5Y 7Y 10Y 20Y 30Y; month tenors as exact
  // twelfths of a year.
  static MaturityGrid us_treasury_12() {
    return MaturityGrid({1.0 / 12, 2.0 / 12, 3.0 / 12, 6.0 / 12, 1, 2, 3, 5,
                         7, 10, 20, 30});
  }

  static MaturityGrid uniform(double lo, double hi, int n) {
    if (n < 1 || !(lo > 0) || !(hi > lo))
      throw std::domain_error("invalid uniform grid request");
    std::vector<double> t(n);
    if (n == 1) {
      t[0] = lo;
    } else {
      for (int i = 0; i < n; ++i)
        t[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    }
    return MaturityGrid(std::move(t));
  }

 private:
  std::vector<double> taus_;
};

struct NssParams {
  Eigen::Vector4d beta;
  Eigen::Vector2d lambda;  // both components > 0
};

struct DesignMatrix {
  Eigen::MatrixXd values;  // m x 4
  MaturityGrid grid;
  Eigen::Vector2d lambda;
};

// (1 - e^{-x})/x, with the 4-term series below 1e-4 to avoid cancellation.
double decay_f(double x);

// d/dx of decay_f, same small-x switch.
double decay_f_prime(double x);

double basis_value(int j, const Eigen::Vector2d& lambda, double tau);

DesignMatrix design_matrix(const MaturityGrid& grid,
                           const Eigen::Vector2d& lambda);

Eigen::VectorXd curve_eval(const NssParams& params, const MaturityGrid& grid);

struct TaylorCoefficients {
  double level;
  double slope;
};

TaylorCoefficients taylor_coefficients(const NssParams& params);

inline void check_lambda(const Eigen::Vector2d& lambda) {
  if (!(lambda(0) > 0.0) || !(lambda(1) > 0.0))
    throw std::domain_error("lambda components must be positive");
}

}  // namespace nss
