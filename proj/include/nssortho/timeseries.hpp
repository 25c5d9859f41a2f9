#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nssortho/core.hpp"
#include "nssortho/varpro.hpp"

namespace nss {

struct TenorInfo {
  std::string label;  // e.g. "3M", "10Y"
  double years = 0.0;
};

// A yield panel: one row per date, one column per tenor, decimals (0.05 for
// five percent). Missing observations are NaN.
struct YieldHistory {
  std::vector<std::string> dates;
  std::vector<TenorInfo> tenors;
  Eigen::MatrixXd values;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The tenor subset used for daily calibration.
const std::vector<std::string>& default_tenor_selection();

// Reads a CSV with header `date,<tenor>,...`, values in percent. "ND" and
// empty cells are missing. Keeps `selection` columns in the given order;
// with complete_case, rows missing any selected value are dropped.
YieldHistory load_history(const std::string& path,
                          const std::vector<std::string>& selection =
                              default_tenor_selection(),
                          bool complete_case = true);

YieldHistory parse_history(std::istream& in,
                           const std::vector<std::string>& selection =
                               default_tenor_selection(),
                           bool complete_case = true);

struct TimeseriesConfig {
  LambdaBox box;
  double sigma = 5e-5;
  double delta = 5e-4;
  OuterConfig outer;
};

struct DailyRecord {
  std::string date;
  bool fit_failed = false;
  std::string failure_reason;
  Eigen::Vector2d lambda = Eigen::Vector2d::Zero();
  Eigen::Vector4d gamma = Eigen::Vector4d::Zero();
  Eigen::Vector4d beta = Eigen::Vector4d::Zero();
  int p = 4;
  double r44 = 0.0;
  double kappa = 0.0;
  double rmse = 0.0;
  double sigma_hat = 0.0;
  bool used_warm_start = false;
  // Frobenius distance of Psi(prev lambda)^T Psi(lambda) from the identity,
  // both bases built on today's grid. Empty on the first fitted day.
  std::optional<double> basis_rotation;
  Eigen::Vector4d fisher_std_beta = Eigen::Vector4d::Zero();
  Eigen::Vector4d fisher_std_gamma = Eigen::Vector4d::Zero();
  Eigen::VectorXd residuals;
};

// Calibrates every row: global search on the first day, warm starts after.
std::vector<DailyRecord> run_daily(const YieldHistory& history,
                                   const TimeseriesConfig& config = {});

struct SmoothnessMetrics {
  double rho = 0.0;   // std of daily changes over std of levels
  double jump = 0.0;  // 95th percentile |change| over interquartile range
  bool undefined = false;
};

SmoothnessMetrics smoothness_metrics(const std::vector<double>& series);

struct SmoothnessRow {
  std::string name;
  SmoothnessMetrics metrics;
};

struct SmoothnessReport {
  // beta1..4, gamma1..4, lambda1..2 in that order.
  std::vector<SmoothnessRow> rows;
  // Component-wise beta-over-gamma ratios (NaN where either is undefined).
  Eigen::Vector4d rho_ratio = Eigen::Vector4d::Zero();
  Eigen::Vector4d jump_ratio = Eigen::Vector4d::Zero();
};

SmoothnessReport smoothness(const std::vector<DailyRecord>& records);

struct FitQualityTable {
  // Daily RMSE distribution across fitted days.
  double median_rmse = 0.0;
  double q95_rmse = 0.0;
  double max_rmse = 0.0;
  double median_max_abs_residual = 0.0;
  // The same RMSE summary split at the median r44.
  double median_r44 = 0.0;
  long n_low = 0;
  long n_high = 0;
  double median_rmse_low = 0.0;
  double median_rmse_high = 0.0;
  double spearman_rmse_r44 = 0.0;
  // Per-tenor residual stats; empty when days use different grids.
  std::vector<double> tenor_mean_bias;
  std::vector<double> tenor_rmse;
};

FitQualityTable fit_quality(const std::vector<DailyRecord>& records);

struct FisherBands {
  std::vector<std::string> dates;
  Eigen::MatrixXd beta;        // n x 4 centers
  Eigen::MatrixXd beta_half;   // n x 4 half-widths (two standard errors)
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd gamma_half;
  // Ratio of mean beta standard error to mean gamma standard error.
  Eigen::Vector4d mean_ratio = Eigen::Vector4d::Zero();
};

FisherBands fisher_bands(const std::vector<DailyRecord>& records);

struct MonthlyPanel {
  std::vector<std::string> months;  // "YYYY-MM"
  Eigen::MatrixXd beta;             // one row per month: last fitted day
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd lambda;
};

MonthlyPanel monthly_downsample(const std::vector<DailyRecord>& records);

// Writes records.jsonl, fit_quality.csv, smoothness.csv, bands.csv,
// monthly_beta.csv and monthly_gamma.csv into `dir`.
void write_timeseries_outputs(const std::string& dir,
                              const std::vector<DailyRecord>& records);

}  // namespace nss
