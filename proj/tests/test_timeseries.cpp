#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nssortho/covariance.hpp"
#include "nssortho/qr.hpp"
#include "nssortho/rng.hpp"
#include "nssortho/stats.hpp"
#include "nssortho/synthetic.hpp"
#include "nssortho/timeseries.hpp"

using nss::MaturityGrid;

namespace {

const std::vector<double> kDefaultYears = {0.25, 0.5, 1.0, 2.0, 3.0,
                                           5.0,  7.0, 10.0, 30.0};

nss::YieldHistory constant_history(int days) {
  nss::YieldHistory h;
  for (const auto& label : nss::default_tenor_selection())
    h.tenors.push_back(nss::TenorInfo{
        label, 0.0});  // years filled in below to match kDefaultYears
  for (std::size_t k = 0; k < kDefaultYears.size(); ++k)
    h.tenors[k].years = kDefaultYears[k];

  const nss::NssParams truth = nss::regime_params(nss::Regime::normal);
  const Eigen::VectorXd y =
      nss::curve_eval(truth, MaturityGrid(kDefaultYears));
  h.values.resize(days, y.size());
  for (int t = 0; t < days; ++t) {
    h.values.row(t) = y.transpose();
    char buf[16];
    std::snprintf(buf, sizeof(buf), "2024-01-%02d", t + 2);
    h.dates.emplace_back(buf);
  }
  return h;
}

nss::DailyRecord fitted_record(const std::string& date, double b4,
                               double g4) {
  nss::DailyRecord rec;
  rec.date = date;
  rec.beta << 0.04, -0.02, 0.015, b4;
  rec.gamma << 0.1, -0.05, 0.01, g4;
  rec.lambda << 0.6, 0.2;
  rec.r44 = 0.1;
  rec.rmse = 1e-5;
  rec.residuals = Eigen::VectorXd::Zero(3);
  rec.fisher_std_beta.setConstant(3e-5);
  rec.fisher_std_gamma.setConstant(1e-5);
  return rec;
}

}  // namespace

TEST_SUITE("timeseries") {

TEST_CASE("csv parser converts percent quotes to decimals") {
  std::istringstream in(
      "date,3M,6M,2Y\n"
      "2024-01-02,4.66,4.59,4.12\n"
      "2024-01-03,4.62,4.55,4.09\n");
  const auto h = nss::parse_history(in, {"3M", "6M", "2Y"});
  REQUIRE(h.dates.size() == 2);
  REQUIRE(h.values.rows() == 2);
  REQUIRE(h.values.cols() == 3);
  CHECK(h.dates[0] == "2024-01-02");
  CHECK(h.values(0, 0) == 4.66 / 100.0);
  CHECK(h.values(0, 2) == 4.12 / 100.0);
  CHECK(h.values(1, 1) == 4.55 / 100.0);
  REQUIRE(h.tenors.size() == 3);
  CHECK(h.tenors[0].label == "3M");
  CHECK(h.tenors[0].years == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(h.tenors[1].years == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(h.tenors[2].years == 2.0);
}

TEST_CASE("selection reorders and subsets the header columns") {
  std::istringstream in(
      "date,1M,3M,10Y\n"
      "2024-01-02,5.50,4.66,4.00\n");
  const auto h = nss::parse_history(in, {"10Y", "3M"});
  REQUIRE(h.values.cols() == 2);
  CHECK(h.values(0, 0) == 4.00 / 100.0);
  CHECK(h.values(0, 1) == 4.66 / 100.0);
  CHECK(h.tenors[0].label == "10Y");
  CHECK(h.tenors[0].years == 10.0);
}

TEST_CASE("missing markers drop the row under complete-case filtering") {
  const std::string csv =
      "date,3M,2Y\n"
      "2024-01-02,4.66,4.12\n"
      "2024-01-03,ND,4.09\n"
      "2024-01-04,4.60,\n"
      "2024-01-05,4.58,N/A\n"
      "2024-01-08,4.55,4.01\n";
  {
    std::istringstream in(csv);
    const auto h = nss::parse_history(in, {"3M", "2Y"}, true);
    REQUIRE(h.dates.size() == 2);
    CHECK(h.dates[0] == "2024-01-02");
    CHECK(h.dates[1] == "2024-01-08");
  }
  {
    std::istringstream in(csv);
    const auto h = nss::parse_history(in, {"3M", "2Y"}, false);
    REQUIRE(h.dates.size() == 5);
    CHECK(std::isnan(h.values(1, 0)));
    CHECK(h.values(1, 1) == 4.09 / 100.0);
    CHECK(std::isnan(h.values(2, 1)));
    CHECK(std::isnan(h.values(3, 1)));
  }
}

TEST_CASE("parser reports the offending line") {
  {
    std::istringstream in("");
    CHECK_THROWS_AS(nss::parse_history(in, {"3M"}), nss::ParseError);
  }
  {
    std::istringstream in("day,3M\n");
    try {
      nss::parse_history(in, {"3M"});
      FAIL("expected ParseError");
    } catch (const nss::ParseError& e) {
      CHECK(e.line() == 1);
    }
  }
  {
    std::istringstream in(
        "date,3M,2Y\n"
        "2024-01-02,4.66,4.12\n"
        "2024-01-03,4.62\n");
    try {
      nss::parse_history(in, {"3M", "2Y"});
      FAIL("expected ParseError");
    } catch (const nss::ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  {
    std::istringstream in(
        "date,3M\n"
        "2024-01-02,4.6x6\n");
    try {
      nss::parse_history(in, {"3M"});
      FAIL("expected ParseError");
    } catch (const nss::ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("4.6x6") != std::string::npos);
    }
  }
}

TEST_CASE("unknown tenors and bad labels are configuration errors") {
  {
    std::istringstream in("date,3M\n2024-01-02,4.66\n");
    CHECK_THROWS_AS(nss::parse_history(in, {"42Y"}), nss::ConfigError);
  }
  {
    std::istringstream in("date,XQ\n2024-01-02,4.66\n");
    CHECK_THROWS_AS(nss::parse_history(in, {"XQ"}), nss::ConfigError);
  }
  {
    std::istringstream in("date,3M\n2024-01-02,4.66\n");
    CHECK_THROWS_AS(nss::parse_history(in, {}), nss::ConfigError);
  }
}

TEST_CASE("parser tolerates CRLF endings, blank lines and a BOM") {
  std::istringstream in(
      "\xEF\xBB\xBF"
      "date,3M\r\n"
      "2024-01-02,4.66\r\n"
      "\r\n"
      "2024-01-03,4.62\r\n");
  const auto h = nss::parse_history(in, {"3M"});
  REQUIRE(h.dates.size() == 2);
  CHECK(h.values(1, 0) == 4.62 / 100.0);
}

TEST_CASE("default tenor selection spans money market to the long bond") {
  const auto& sel = nss::default_tenor_selection();
  REQUIRE(sel.size() == 9);
  CHECK(sel.front() == "3M");
  CHECK(sel.back() == "30Y");
}

TEST_CASE("daily calibration on a frozen panel is a fixed point") {
  const auto history = constant_history(8);
  nss::TimeseriesConfig config;
  config.delta = 5e-3;  // keep the full four-column fit engaged
  const auto records = nss::run_daily(history, config);
  REQUIRE(records.size() == 8);

  const nss::NssParams truth = nss::regime_params(nss::Regime::normal);
  for (const auto& rec : records) {
    REQUIRE_FALSE(rec.fit_failed);
    CHECK(rec.p == 4);
    CHECK((rec.lambda - truth.lambda).cwiseAbs().maxCoeff() <= 1e-5);
    CHECK((rec.beta - truth.beta).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(rec.rmse <= 1e-9);
  }

  CHECK_FALSE(records[0].used_warm_start);
  CHECK_FALSE(records[0].basis_rotation.has_value());
  for (std::size_t t = 1; t < records.size(); ++t) {
    CHECK(records[t].used_warm_start);
    REQUIRE(records[t].basis_rotation.has_value());
    CHECK(*records[t].basis_rotation <= 1e-6);
    CHECK((records[t].lambda - records[0].lambda).cwiseAbs().maxCoeff() <=
          1e-5);
  }
}

TEST_CASE("daily records are internally consistent") {
  const auto history = constant_history(3);
  nss::TimeseriesConfig config;
  config.delta = 5e-3;
  const auto records = nss::run_daily(history, config);
  const MaturityGrid grid(kDefaultYears);
  const Eigen::VectorXd y = history.values.row(0).transpose();

  for (const auto& rec : records) {
    REQUIRE_FALSE(rec.fit_failed);
    const long m = rec.residuals.size();
    REQUIRE(m == 9);

    // Same curve in both coordinate systems.
    const auto phi = nss::design_matrix(grid, rec.lambda);
    const auto fact = nss::thin_qr_positive(phi);
    CHECK((phi.values * rec.beta - fact.psi * rec.gamma).norm() <=
          1e-10 * y.norm());

    // The stored residuals reproduce rmse and sigma_hat.
    const double rss = rec.residuals.squaredNorm();
    CHECK(rec.rmse ==
          doctest::Approx(std::sqrt(rss / static_cast<double>(m)))
              .epsilon(1e-12));
    CHECK(rec.sigma_hat ==
          doctest::Approx(nss::sigma_hat_from_rss(rss, static_cast<int>(m)))
              .epsilon(1e-12));

    // Rotated coordinates carry the flat uncertainty.
    for (int j = 0; j < 4; ++j)
      CHECK(rec.fisher_std_gamma(j) == rec.sigma_hat);
    // Raw-coefficient uncertainties are sigma_hat times the row norms of
    // the inverse pivot matrix; the curvature coordinate fares worst.
    if (rec.sigma_hat > 0.0) {
      const Eigen::Matrix4d rinv =
          fact.r.triangularView<Eigen::Upper>().solve(
              Eigen::Matrix4d::Identity());
      for (int j = 0; j < 4; ++j)
        CHECK(rec.fisher_std_beta(j) / rec.sigma_hat ==
              doctest::Approx(rinv.row(j).norm()).epsilon(1e-10));
      CHECK(rec.fisher_std_beta(3) > rec.fisher_std_beta(0));
      CHECK(rec.fisher_std_beta(3) > rec.sigma_hat);
    }
  }
}

TEST_CASE("days with too few quotes fail softly and do not seed warm starts") {
  auto history = constant_history(3);
  // Knock out all but four quotes on the first day.
  for (int k = 0; k < 5; ++k)
    history.values(0, k) = std::numeric_limits<double>::quiet_NaN();

  const auto records = nss::run_daily(history);
  REQUIRE(records.size() == 3);
  CHECK(records[0].fit_failed);
  CHECK(records[0].failure_reason.find("fewer than 5") != std::string::npos);

  // The first successful day is still a cold start.
  REQUIRE_FALSE(records[1].fit_failed);
  CHECK_FALSE(records[1].used_warm_start);
  CHECK_FALSE(records[1].basis_rotation.has_value());
  REQUIRE_FALSE(records[2].fit_failed);
  CHECK(records[2].used_warm_start);
}

TEST_CASE("tenor selection must be strictly increasing in maturity") {
  nss::YieldHistory h;
  h.tenors = {{"3M", 0.25}, {"2Y", 2.0}, {"1Y", 1.0}};
  h.dates = {"2024-01-02"};
  h.values.resize(1, 3);
  h.values << 0.05, 0.045, 0.046;
  CHECK_THROWS_AS(nss::run_daily(h), nss::ConfigError);
}

TEST_CASE("smoothness metrics on elementary series") {
  CHECK(nss::smoothness_metrics({1.0, 2.0}).undefined);
  CHECK(nss::smoothness_metrics({3.0, 3.0, 3.0, 3.0}).undefined);

  std::vector<double> ramp(100);
  for (int i = 0; i < 100; ++i) ramp[i] = 0.01 * i;
  const auto m = nss::smoothness_metrics(ramp);
  REQUIRE_FALSE(m.undefined);
  CHECK(m.rho <= 1e-12);  // constant increments, up to grid roundoff
  CHECK(m.jump > 0.0);
}

TEST_CASE("white noise has the classic differencing signature") {
  nss::Rng rng(101);
  std::vector<double> series(100000);
  for (auto& v : series) v = rng.normal();
  const auto m = nss::smoothness_metrics(series);
  CHECK(m.rho == doctest::Approx(1.4133974578316457).epsilon(1e-12));
  CHECK(m.rho == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("smoothness report wires the right series to the right rows") {
  std::vector<nss::DailyRecord> records;
  nss::Rng rng(555);
  for (int t = 0; t < 60; ++t) {
    auto rec = fitted_record("2024-01-02", 0.008 + 1e-4 * t,
                             2e-3 * rng.normal());
    records.push_back(rec);
  }
  // A failed day with absurd values must be ignored.
  nss::DailyRecord bad;
  bad.fit_failed = true;
  bad.beta.setConstant(1e6);
  bad.gamma.setConstant(-1e6);
  records.push_back(bad);

  const auto report = nss::smoothness(records);
  REQUIRE(report.rows.size() == 10);
  CHECK(report.rows[0].name == "beta1");
  CHECK(report.rows[3].name == "beta4");
  CHECK(report.rows[4].name == "gamma1");
  CHECK(report.rows[7].name == "gamma4");
  CHECK(report.rows[8].name == "lambda1");
  CHECK(report.rows[9].name == "lambda2");

  // Constant series (beta1..3, gamma1..3, lambdas) are undefined.
  CHECK(report.rows[0].metrics.undefined);
  CHECK(report.rows[4].metrics.undefined);
  CHECK(report.rows[8].metrics.undefined);

  // beta4 is a smooth ramp, gamma4 is white noise.
  REQUIRE_FALSE(report.rows[3].metrics.undefined);
  REQUIRE_FALSE(report.rows[7].metrics.undefined);
  CHECK(report.rows[3].metrics.rho < report.rows[7].metrics.rho);

  CHECK(report.jump_ratio(3) ==
        doctest::Approx(report.rows[3].metrics.jump /
                        report.rows[7].metrics.jump)
            .epsilon(1e-15));
  CHECK(report.rho_ratio(3) < 1.0);
  // Undefined pairs propagate as NaN ratios.
  CHECK(std::isnan(report.rho_ratio(0)));
  CHECK(std::isnan(report.jump_ratio(1)));
}

TEST_CASE("fit quality table splits cleanly at the median pivot") {
  std::vector<nss::DailyRecord> records;
  const std::vector<double> r44 = {0.01, 0.02, 0.03, 0.04, 0.05, 0.06};
  for (std::size_t i = 0; i < r44.size(); ++i) {
    auto rec = fitted_record("2024-01-02", 0.008, 0.001);
    rec.r44 = r44[i];
    rec.rmse = 1e-4 * static_cast<double>(r44.size() - i);  // decreasing
    rec.residuals = Eigen::VectorXd::Constant(3, rec.rmse);
    records.push_back(rec);
  }

  const auto table = nss::fit_quality(records);
  CHECK(table.median_r44 == doctest::Approx(0.035).epsilon(1e-15));
  CHECK(table.n_low == 3);
  CHECK(table.n_high == 3);
  CHECK(table.median_rmse == doctest::Approx(3.5e-4).epsilon(1e-12));
  CHECK(table.max_rmse == doctest::Approx(6e-4).epsilon(1e-12));
  CHECK(table.median_rmse_low == doctest::Approx(5e-4).epsilon(1e-12));
  CHECK(table.median_rmse_high == doctest::Approx(2e-4).epsilon(1e-12));
  // rmse is strictly decreasing in r44 here.
  CHECK(table.spearman_rmse_r44 == doctest::Approx(-1.0).epsilon(1e-12));

  REQUIRE(table.tenor_mean_bias.size() == 3);
  const double expect_bias = (6 + 5 + 4 + 3 + 2 + 1) * 1e-4 / 6.0;
  CHECK(table.tenor_mean_bias[0] ==
        doctest::Approx(expect_bias).epsilon(1e-12));
  const double expect_rmse =
      std::sqrt((36 + 25 + 16 + 9 + 4 + 1) * 1e-8 / 6.0);
  CHECK(table.tenor_rmse[2] == doctest::Approx(expect_rmse).epsilon(1e-12));
}

TEST_CASE("fit quality handles degenerate inputs") {
  {
    std::vector<nss::DailyRecord> records(1,
                                          fitted_record("d", 0.008, 0.001));
    records[0].rmse = 2e-4;
    records[0].residuals = Eigen::VectorXd::Constant(3, 1e-4);
    const auto table = nss::fit_quality(records);
    CHECK(table.median_rmse == 2e-4);
    CHECK(table.q95_rmse == 2e-4);
    CHECK(table.max_rmse == 2e-4);
    CHECK(table.n_low == 0);
    CHECK(table.n_high == 1);
    CHECK(std::isnan(table.spearman_rmse_r44));
  }
  {
    nss::DailyRecord bad;
    bad.fit_failed = true;
    const auto table = nss::fit_quality({bad, bad});
    CHECK(std::isnan(table.spearman_rmse_r44));
    CHECK(table.median_rmse == 0.0);
  }
  {
    // Mixed grids suppress the per-tenor columns.
    auto a = fitted_record("d1", 0.008, 0.001);
    auto b = fitted_record("d2", 0.008, 0.001);
    a.residuals = Eigen::VectorXd::Zero(3);
    b.residuals = Eigen::VectorXd::Zero(4);
    const auto table = nss::fit_quality({a, b});
    CHECK(table.tenor_mean_bias.empty());
    CHECK(table.tenor_rmse.empty());
  }
}

TEST_CASE("uncertainty bands are centered two-sigma intervals") {
  auto a = fitted_record("2024-01-02", 0.008, 0.001);
  nss::DailyRecord failed;
  failed.fit_failed = true;
  failed.date = "2024-01-03";
  auto b = fitted_record("2024-01-04", 0.009, 0.002);

  const auto bands = nss::fisher_bands({a, failed, b});
  REQUIRE(bands.dates.size() == 2);
  CHECK(bands.dates[0] == "2024-01-02");
  CHECK(bands.dates[1] == "2024-01-04");
  CHECK(bands.beta(0, 3) == 0.008);
  CHECK(bands.gamma(1, 3) == 0.002);
  CHECK(bands.beta_half(0, 0) == doctest::Approx(6e-5).epsilon(1e-15));
  CHECK(bands.gamma_half(0, 0) == doctest::Approx(2e-5).epsilon(1e-15));
  for (int j = 0; j < 4; ++j)
    CHECK(bands.mean_ratio(j) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("monthly panel keeps the last fitted day of each month") {
  std::vector<nss::DailyRecord> records;
  records.push_back(fitted_record("2024-01-02", 0.001, 0.0));
  records.push_back(fitted_record("2024-01-31", 0.002, 0.0));
  records.push_back(fitted_record("2024-02-05", 0.003, 0.0));
  nss::DailyRecord failed;
  failed.fit_failed = true;
  failed.date = "2024-02-28";
  records.push_back(failed);
  records.push_back(fitted_record("2024-03-04", 0.004, 0.0));
  nss::DailyRecord short_date = fitted_record("2024", 0.005, 0.0);
  records.push_back(short_date);

  const auto panel = nss::monthly_downsample(records);
  REQUIRE(panel.months.size() == 3);
  CHECK(panel.months[0] == "2024-01");
  CHECK(panel.months[1] == "2024-02");
  CHECK(panel.months[2] == "2024-03");
  CHECK(panel.beta(0, 3) == 0.002);  // Jan 31 wins over Jan 2
  CHECK(panel.beta(1, 3) == 0.003);  // failed Feb 28 is skipped
  CHECK(panel.beta(2, 3) == 0.004);
  CHECK(panel.lambda.rows() == 3);
}

TEST_CASE("output writer produces the full file set") {
  namespace fs = std::filesystem;
  const auto history = constant_history(3);
  nss::TimeseriesConfig config;
  config.delta = 5e-3;
  const auto records = nss::run_daily(history, config);

  const fs::path dir = fs::temp_directory_path() / "nssortho_ts_out";
  fs::remove_all(dir);
  nss::write_timeseries_outputs(dir.string(), records);

  for (const char* name :
       {"records.jsonl", "fit_quality.csv", "smoothness.csv", "bands.csv",
        "monthly_beta.csv", "monthly_gamma.csv"}) {
    CAPTURE(name);
    CHECK(fs::exists(dir / name));
  }

  std::ifstream jl(dir / "records.jsonl");
  std::string line;
  REQUIRE(std::getline(jl, line));
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("date") == "2024-01-02");
  CHECK(j.at("fit_failed") == false);
  CHECK(j.at("lambda").size() == 2);
  CHECK(j.at("beta").size() == 4);
  CHECK(j.at("residuals").size() == 9);
  CHECK(j.at("basis_rotation").is_null());
  REQUIRE(std::getline(jl, line));
  const auto j2 = nlohmann::json::parse(line);
  CHECK(j2.at("basis_rotation").is_number());
  CHECK(j2.at("used_warm_start") == true);

  int csv_lines = 0;
  std::ifstream bands(dir / "bands.csv");
  while (std::getline(bands, line)) ++csv_lines;
  CHECK(csv_lines == 4);  // header + three fitted days

  fs::remove_all(dir);
}

}  // TEST_SUITE
