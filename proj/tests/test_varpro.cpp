#include <doctest.h>

#include <cmath>

#include "nssortho/core.hpp"
#include "nssortho/qr.hpp"
#include "nssortho/rng.hpp"
#include "nssortho/varpro.hpp"

using nss::MaturityGrid;

namespace {

const Eigen::Vector4d kBeta(0.04, -0.02, 0.015, 0.008);

Eigen::VectorXd with_noise(const Eigen::VectorXd& clean, double sigma,
                           std::uint64_t seed) {
  Eigen::VectorXd y = clean;
  nss::Rng rng(seed);
  for (long i = 0; i < y.size(); ++i) y(i) += sigma * rng.normal();
  return y;
}

}  // namespace

TEST_SUITE("varpro") {

TEST_CASE("reduced objective: exact zero in span, full norm off span") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const Eigen::Vector2d lam(0.6, 0.3);
  const auto phi = nss::design_matrix(grid, lam);

  const Eigen::VectorXd in_span = phi.values * kBeta;
  CHECK(nss::reduced_objective(lam, grid, in_span) <=
        1e-18 * in_span.squaredNorm());

  const auto fact = nss::thin_qr_positive(phi);
  nss::Rng rng(5);
  Eigen::VectorXd r(12);
  for (int i = 0; i < 12; ++i) r(i) = rng.normal();
  const Eigen::VectorXd perp = r - fact.psi * (fact.psi.transpose() * r);
  CHECK(nss::reduced_objective(lam, grid, perp) ==
        doctest::Approx(perp.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("reduced objective agrees with a pivoted least-squares residual") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  nss::Rng rng(9);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y(i) = 0.03 + 0.01 * rng.normal();

  for (const auto& lam : {Eigen::Vector2d(0.6, 0.2), Eigen::Vector2d(1.8, 0.07),
                          Eigen::Vector2d(0.6, 0.59)}) {
    const auto phi = nss::design_matrix(grid, lam);
    const Eigen::VectorXd resid =
        y - phi.values * phi.values.colPivHouseholderQr().solve(y);
    CHECK(nss::reduced_objective(lam, grid, y) ==
          doctest::Approx(resid.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("on the degenerate manifold the objective is the three-factor one") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  nss::Rng rng(13);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y(i) = 0.03 + 0.01 * rng.normal();

  const Eigen::Vector2d lam(0.5, 0.5);
  const Eigen::MatrixXd phi3 =
      nss::design_matrix(grid, lam).values.leftCols(3);
  const Eigen::VectorXd resid =
      y - phi3 * phi3.colPivHouseholderQr().solve(y);
  CHECK(nss::reduced_objective(lam, grid, y) ==
        doctest::Approx(resid.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("noiseless recovery of the generating rates") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2)};
  const Eigen::VectorXd y = nss::curve_eval(truth, grid);

  const auto fit = nss::fit_global(grid, y, {}, 5e-5, 5e-4);
  CHECK(std::abs(fit.lambda(0) - 0.6) <= 1e-3);
  CHECK(std::abs(fit.lambda(1) - 0.2) <= 1e-3);
  CHECK(fit.objective <= 1e-16);
  CHECK(fit.inner.p == 4);
  CHECK((fit.inner.beta - kBeta).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK_FALSE(fit.used_warm_start);
  CHECK(fit.iterations > 0);
}

TEST_CASE("the stored objective is the squared inner residual") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2)};
  const Eigen::VectorXd y =
      with_noise(nss::curve_eval(truth, grid), 5e-5, 5);
  const auto fit = nss::fit_global(grid, y, {}, 5e-5, 5e-4);
  CHECK(fit.objective ==
        doctest::Approx(fit.inner.residual_norm * fit.inner.residual_norm)
            .epsilon(1e-12));
}

TEST_CASE("a constant curve is reproduced exactly") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 0.035);
  const auto fit = nss::fit_global(grid, y, {}, 5e-5, 5e-4);
  CHECK((fit.inner.fitted - y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("no sampled rate pair beats the optimizer") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2)};
  const Eigen::VectorXd y =
      with_noise(nss::curve_eval(truth, grid), 5e-5, 21);
  const nss::LambdaBox box;

  const auto fit = nss::fit_global(grid, y, box, 5e-5, 5e-4);
  const double h_star = nss::reduced_objective(fit.lambda, grid, y);

  nss::Rng rng(22);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector2d lam;
    for (int j = 0; j < 2; ++j)
      lam(j) = std::exp(rng.uniform(std::log(box.lo(j)),
                                    std::log(box.hi(j))));
    CHECK(h_star <= nss::reduced_objective(lam, grid, y) + 1e-18);
  }
}

TEST_CASE("warm start is a fixed point on unchanged data") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2)};
  const Eigen::VectorXd y =
      with_noise(nss::curve_eval(truth, grid), 5e-5, 33);

  const auto cold = nss::fit_global(grid, y, {}, 5e-5, 5e-4);
  const auto warm = nss::fit_warm(grid, y, cold.lambda, {}, 5e-5, 5e-4);
  CHECK(warm.used_warm_start);
  CHECK((warm.lambda - cold.lambda).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(nss::reduced_objective(warm.lambda, grid, y) <=
        nss::reduced_objective(cold.lambda, grid, y) + 1e-18);
}

TEST_CASE("warm start never loses to its own starting point") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2)};
  const Eigen::VectorXd y1 =
      with_noise(nss::curve_eval(truth, grid), 5e-5, 41);
  const Eigen::VectorXd y2 =
      with_noise(nss::curve_eval(truth, grid), 5e-5, 42);

  const auto day1 = nss::fit_global(grid, y1, {}, 5e-5, 5e-4);
  const auto day2 = nss::fit_warm(grid, y2, day1.lambda, {}, 5e-5, 5e-4);
  CHECK(nss::reduced_objective(day2.lambda, grid, y2) <=
        nss::reduced_objective(day1.lambda, grid, y2) + 1e-15);
}

TEST_CASE("warm chain tracks a drifting curve") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  Eigen::Vector2d prev(0.6, 0.2);
  for (int day = 0; day < 30; ++day) {
    nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2 + 0.002 * day)};
    const Eigen::VectorXd y =
        with_noise(nss::curve_eval(truth, grid), 5e-6, 100 + day);
    const auto fit = nss::fit_warm(grid, y, prev, {}, 5e-6, 5e-5);
    CHECK(std::abs(fit.lambda(1) - truth.lambda(1)) <= 0.05);
    prev = fit.lambda;
  }
}

TEST_CASE("a warm start outside the box is rejected") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 0.03);
  CHECK_THROWS_AS(
      nss::fit_warm(grid, y, Eigen::Vector2d(10.0, 0.2), {}, 5e-5, 5e-4),
      std::domain_error);
}

TEST_CASE("box and data validation") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  nss::LambdaBox bad;
  bad.lo = Eigen::Vector2d(0.5, 0.5);
  bad.hi = Eigen::Vector2d(0.4, 5.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(12, 0.03);
  CHECK_THROWS_AS(nss::fit_global(grid, y, bad, 5e-5, 5e-4),
                  std::domain_error);

  const Eigen::VectorXd short_y = Eigen::VectorXd::Constant(5, 0.03);
  CHECK_THROWS_AS(nss::fit_global(grid, short_y, {}, 5e-5, 5e-4),
                  std::invalid_argument);
}

TEST_CASE("a coarser outer configuration still lands on the optimum") {
  const MaturityGrid grid = MaturityGrid::us_treasury_12();
  const nss::NssParams truth{kBeta, Eigen::Vector2d(0.6, 0.2)};
  const Eigen::VectorXd y = nss::curve_eval(truth, grid);
  nss::OuterConfig cfg;
  cfg.coarse_resolution = 12;
  cfg.polish_starts = 3;
  const auto fit = nss::fit_global(grid, y, {}, 5e-5, 5e-4, cfg);
  CHECK(std::abs(fit.lambda(0) - 0.6) <= 1e-2);
  CHECK(std::abs(fit.lambda(1) - 0.2) <= 1e-2);
  CHECK(fit.objective <= 1e-14);
}

}  // TEST_SUITE
