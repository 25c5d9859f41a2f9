#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nssortho/core.hpp"
#include "nssortho/gram.hpp"
#include "nssortho/qr.hpp"
#include "oracles.hpp"

TEST_SUITE("gram") {

TEST_CASE("exponential integral: frozen references") {
  CHECK(nss::exp_integral_e1(0.001) ==
        doctest::Approx(6.331539364136149).epsilon(1e-13));
  CHECK(nss::exp_integral_e1(0.5) ==
        doctest::Approx(0.55977359477616084).epsilon(1e-13));
  CHECK(nss::exp_integral_e1(1.0) ==
        doctest::Approx(0.21938393439552051).epsilon(1e-13));
  CHECK(nss::exp_integral_e1(2.0) ==
        doctest::Approx(0.048900510708061062).epsilon(1e-13));
  CHECK(nss::exp_integral_e1(10.0) ==
        doctest::Approx(4.1569689296853263e-06).epsilon(1e-13));
  CHECK_THROWS_AS(nss::exp_integral_e1(0.0), std::domain_error);
  CHECK_THROWS_AS(nss::exp_integral_e1(-1.0), std::domain_error);
}

TEST_CASE("exponential integral: quadrature cross-check over six decades") {
  for (int i = 0; i < 20; ++i) {
    const double x =
        std::exp(std::log(1e-3) +
                 (std::log(50.0) - std::log(1e-3)) * i / 19.0);
    const double ref = oracles::exp_integral_e1(x);
    CHECK(std::abs(nss::exp_integral_e1(x) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("series and continued fraction agree around the switch point") {
  for (int i = 0; i < 15; ++i) {
    const double x = 0.5 + 1.5 * i / 14.0;
    const double s = nss::detail::e1_series(x);
    const double c = nss::detail::e1_continued_fraction(x);
    CHECK(std::abs(s - c) <= 1e-12 * std::abs(s));
  }
}

TEST_CASE("large arguments respect the classical envelope") {
  const double x = 50.0;
  const double v = nss::exp_integral_e1(x);
  CHECK(v <= std::exp(-x) / x);
  CHECK(v >= std::exp(-x) * (1.0 / x - 1.0 / (x * x)));
}

TEST_CASE("helper integrals: closed forms against quadrature") {
  const auto h = nss::helper_integrals(0.6, 0.3, 30.0);

  const double i_ref =
      oracles::integrate([](double t) { return std::exp(-0.6 * t); }, 0.0,
                         30.0);
  CHECK(h.i == doctest::Approx(i_ref).epsilon(1e-12));

  const double f_ref = oracles::integrate(
      [](double t) { return nss::decay_f(0.6 * t); }, 0.0, 30.0);
  CHECK(h.f == doctest::Approx(f_ref).epsilon(1e-11));
  CHECK(h.f == doctest::Approx(5.7793123726688442).epsilon(1e-13));

  const double fe_ref = oracles::integrate(
      [](double t) { return nss::decay_f(0.6 * t) * std::exp(-0.3 * t); },
      0.0, 30.0);
  CHECK(h.fe == doctest::Approx(fe_ref).epsilon(1e-11));

  const double k_ref = oracles::integrate(
      [](double t) {
        return nss::decay_f(0.6 * t) * nss::decay_f(0.3 * t);
      },
      0.0, 30.0);
  CHECK(h.k == doctest::Approx(k_ref).epsilon(1e-11));
}

TEST_CASE("the unit-rate, unit-horizon survival integral") {
  const auto h = nss::helper_integrals(1.0, 1.0, 1.0);
  CHECK(h.i == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("cross integral is symmetric in its rates") {
  const auto ab = nss::helper_integrals(0.6, 0.3, 30.0);
  const auto ba = nss::helper_integrals(0.3, 0.6, 30.0);
  CHECK(std::abs(ab.k - ba.k) <= 1e-13 * std::abs(ab.k));
}

TEST_CASE("gram matrix: frozen entries at the baseline rates") {
  const auto gm = nss::gram_matrix({0.6, 0.3}, 30.0);
  CHECK(gm.g(0, 0) == 30.0);
  CHECK(gm.g(0, 1) == doctest::Approx(5.7793123726688442).epsilon(1e-13));
  CHECK(gm.g(0, 2) == doctest::Approx(4.1126457313854772).epsilon(1e-13));
  CHECK(gm.g(0, 3) == doctest::Approx(5.91525366465339).epsilon(1e-13));
  CHECK(gm.g(1, 1) == doctest::Approx(2.2178980094155616).epsilon(1e-13));
  CHECK(gm.g(1, 2) == doctest::Approx(1.0626527098216678).epsilon(1e-13));
  CHECK(gm.g(1, 3) == doctest::Approx(1.1663880289843318).epsilon(1e-13));
  CHECK(gm.g(2, 2) == doctest::Approx(0.7407407435611072).epsilon(1e-13));
  CHECK(gm.g(2, 3) == doctest::Approx(0.92594878241127931).epsilon(1e-13));
  CHECK(gm.g(3, 3) == doctest::Approx(1.2963876799419582).epsilon(1e-13));
  CHECK((gm.g - gm.g.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("gram matrix: every entry against adaptive quadrature") {
  const double l1s[3] = {0.1, 0.6, 2.0};
  const double l2s[3] = {0.35, 1.1, 3.5};
  for (double t : {1.0, 30.0})
    for (double l1 : l1s)
      for (double l2 : l2s) {
        const Eigen::Vector2d lam(l1, l2);
        const auto gm = nss::gram_matrix(lam, t);
        for (int i = 1; i <= 4; ++i)
          for (int j = i; j <= 4; ++j) {
            const double ref = oracles::gram_entry(i, j, lam, t);
            CHECK(std::abs(gm.g(i - 1, j - 1) - ref) <=
                  1e-8 * std::max(1.0, std::abs(ref)));
          }
      }
}

TEST_CASE("coincident rates duplicate the slope row") {
  const auto gm = nss::gram_matrix({0.5, 0.5}, 20.0);
  CHECK((gm.g.row(2) - gm.g.row(3)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((gm.g.col(2) - gm.g.col(3)).cwiseAbs().maxCoeff() <= 1e-12);

  const auto basis = nss::continuous_basis({0.5, 0.5}, 20.0);
  CHECK(basis.degenerate);
  CHECK(basis.zero_pivot_index == 3);
}

TEST_CASE("continuous basis: Cholesky reconstruction and frozen pivots") {
  const auto basis = nss::continuous_basis({0.6, 0.3}, 30.0);
  REQUIRE_FALSE(basis.degenerate);

  const auto gm = nss::gram_matrix({0.6, 0.3}, 30.0);
  const Eigen::Matrix4d rebuilt = basis.l * basis.l.transpose();
  CHECK((rebuilt - gm.g).cwiseAbs().maxCoeff() <= 1e-12 * gm.g.norm());

  CHECK((basis.r_t - basis.l.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(basis.r_t(0, 0) ==
        doctest::Approx(5.4772255750516612).epsilon(1e-13));
  CHECK(basis.r_t(1, 1) ==
        doctest::Approx(1.0509755592081049).epsilon(1e-13));
  CHECK(basis.r_t(2, 2) ==
        doctest::Approx(0.33280816821461073).epsilon(1e-13));
  CHECK(basis.r_t(3, 3) ==
        doctest::Approx(0.15224534208362883).epsilon(1e-13));
}

TEST_CASE("continuous orthonormal functions integrate to the identity") {
  const Eigen::Vector2d lam(0.6, 0.3);
  const double horizon = 30.0;
  const auto basis = nss::continuous_basis(lam, horizon);

  // psi(tau) = L^{-1} phi(tau), integrated pairwise.
  auto psi_at = [&](double tau) -> Eigen::Vector4d {
    Eigen::Vector4d phi;
    for (int j = 1; j <= 4; ++j)
      phi(j - 1) = oracles::basis_scalar(j, lam, tau);
    return basis.l.triangularView<Eigen::Lower>().solve(phi);
  };
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      auto f = [&](double tau) {
        const Eigen::Vector4d p = psi_at(tau);
        return p(i) * p(j);
      };
      const double v = oracles::integrate(f, 0.0, 1.0, 1e-12) +
                       oracles::integrate(f, 1.0, horizon, 1e-12);
      CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) <= 1e-8);
    }
}

TEST_CASE("continuous fourth pivot shrinks as the rates merge") {
  double prev = -1.0;
  for (int i = 0; i < 20; ++i) {
    const double l2 = 0.3 + (0.599 - 0.3) * i / 19.0;
    const auto basis = nss::continuous_basis({0.6, l2}, 30.0);
    if (i > 0) CHECK(basis.r_t(3, 3) < prev);
    prev = basis.r_t(3, 3);
  }
  CHECK(prev < 0.1 * nss::continuous_basis({0.6, 0.3}, 30.0).r_t(3, 3));
}

TEST_CASE("discrete pivots converge to the continuous one under refinement") {
  // Midpoint sampling of [0, T]: scaling the discrete factorization by
  // sqrt(dtau) turns column sums into integrals.
  const Eigen::Vector2d lam(0.6, 0.3);
  const double horizon = 30.0;
  const double target = nss::continuous_basis(lam, horizon).r_t(3, 3);

  double prev_err = 1e9;
  for (int n : {100, 200, 400}) {
    const double dtau = horizon / n;
    std::vector<double> taus(n);
    for (int i = 0; i < n; ++i) taus[i] = (i + 0.5) * dtau;
    const auto fact = nss::thin_qr_positive(
        nss::design_matrix(nss::MaturityGrid(taus), lam));
    const double err = std::abs(fact.r(3, 3) * std::sqrt(dtau) - target);
    CHECK(err < prev_err);
    prev_err = err;
  }
  CHECK(prev_err <= 1e-4);
}

TEST_CASE("infinite-horizon limit of the decaying block") {
  const Eigen::Vector2d lam(0.6, 0.3);
  const Eigen::Matrix3d minf = nss::decaying_gram_infinite(lam);

  CHECK((minf - minf.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(minf(0, 0) ==
        doctest::Approx(2.0 * std::log(2.0) / 0.6).epsilon(1e-14));
  CHECK(minf(0, 1) == doctest::Approx(1.1552453009332422).epsilon(1e-13));
  CHECK(minf(2, 2) == doctest::Approx(1.6666666666666667).epsilon(1e-13));

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(minf);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("finite horizons close the gap at rate 1/T") {
  const Eigen::Vector2d lam(0.6, 0.3);
  const Eigen::Matrix3d minf = nss::decaying_gram_infinite(lam);
  auto gap = [&](double t) {
    return (nss::gram_matrix(lam, t).g.block<3, 3>(1, 1) - minf)
        .cwiseAbs()
        .maxCoeff();
  };
  const double g1 = gap(1e4);
  const double g2 = gap(2e4);
  CHECK(g1 <= 2e-3);
  CHECK(g1 / g2 == doctest::Approx(2.0).epsilon(0.15));
  CHECK(gap(1e8) <= 1e-6);
}

TEST_CASE("inputs are validated") {
  CHECK_THROWS_AS(nss::gram_matrix({0.6, 0.3}, 0.0), std::domain_error);
  CHECK_THROWS_AS(nss::gram_matrix({0.6, 0.3}, -1.0), std::domain_error);
  CHECK_THROWS_AS(nss::gram_matrix({0.0, 0.3}, 30.0), std::domain_error);
  CHECK_THROWS_AS(nss::helper_integrals(-0.1, 0.3, 30.0), std::domain_error);
}

}  // TEST_SUITE
