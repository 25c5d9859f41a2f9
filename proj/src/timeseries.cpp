#include "nssortho/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nssortho/covariance.hpp"
#include "nssortho/qr.hpp"
#include "nssortho/stats.hpp"

namespace nss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double tenor_to_years(const std::string& label) {
  if (label.size() < 2)
    throw ConfigError("cannot parse tenor label '" + label + "'");
  const char unit = label.back();
  double n = 0.0;
  try {
    std::size_t used = 0;
    n = std::stod(label.substr(0, label.size() - 1), &used);
    if (used != label.size() - 1) throw std::invalid_argument(label);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse tenor label '" + label + "'");
  }
  if (unit == 'M' || unit == 'm') return n / 12.0;
  if (unit == 'Y' || unit == 'y') return n;
  throw ConfigError("tenor label '" + label + "' must end in M or Y");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

const std::vector<std::string>& default_tenor_selection() {
  static const std::vector<std::string> sel = {"3M", "6M", "1Y", "2Y", "3Y",
                                               "5Y", "7Y", "10Y", "30Y"};
  return sel;
}

YieldHistory parse_history(std::istream& in,
                           const std::vector<std::string>& selection,
                           bool complete_case) {
  if (selection.empty()) throw ConfigError("tenor selection is empty");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input", 1);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
    line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv(line);
  if (header.empty() || lower(trim(header[0])) != "date")
    throw ParseError("first header column must be 'date'", 1);

  std::vector<std::size_t> cols(selection.size());
  for (std::size_t k = 0; k < selection.size(); ++k) {
    bool found = false;
    for (std::size_t c = 1; c < header.size(); ++c) {
      if (trim(header[c]) == selection[k]) {
        cols[k] = c;
        found = true;
        break;
      }
    }
    if (!found)
      throw ConfigError("tenor '" + selection[k] + "' not found in header");
  }

  YieldHistory history;
  history.tenors.reserve(selection.size());
  for (const auto& label : selection)
    history.tenors.push_back(TenorInfo{label, tenor_to_years(label)});

  std::vector<Eigen::VectorXd> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);

    Eigen::VectorXd row(static_cast<long>(selection.size()));
    bool any_missing = false;
    for (std::size_t k = 0; k < selection.size(); ++k) {
      const std::string cell = trim(fields[cols[k]]);
      if (cell.empty() || lower(cell) == "nd" || lower(cell) == "na" ||
          lower(cell) == "n/a") {
        row(static_cast<long>(k)) = kNaN;
        any_missing = true;
        continue;
      }
      try {
        std::size_t used = 0;
        const double pct = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        row(static_cast<long>(k)) = pct / 100.0;
      } catch (const std::exception&) {
        throw ParseError("cannot parse yield '" + cell + "'", line_no);
      }
    }
    if (complete_case && any_missing) continue;
    history.dates.push_back(trim(fields[0]));
    rows.push_back(std::move(row));
  }

  history.values.resize(static_cast<long>(rows.size()),
                        static_cast<long>(selection.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    history.values.row(static_cast<long>(r)) = rows[r];
  return history;
}

YieldHistory load_history(const std::string& path,
                          const std::vector<std::string>& selection,
                          bool complete_case) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_history(in, selection, complete_case);
}

std::vector<DailyRecord> run_daily(const YieldHistory& history,
                                   const TimeseriesConfig& config) {
  config.box.validate();
  for (std::size_t k = 1; k < history.tenors.size(); ++k)
    if (!(history.tenors[k].years > history.tenors[k - 1].years))
      throw ConfigError("tenor selection must be strictly increasing");

  std::vector<DailyRecord> records;
  records.reserve(history.dates.size());
  std::optional<Eigen::Vector2d> prev_lambda;

  for (std::size_t t = 0; t < history.dates.size(); ++t) {
    DailyRecord rec;
    rec.date = history.dates[t];

    std::vector<double> taus;
    std::vector<double> quotes;
    for (long k = 0; k < history.values.cols(); ++k) {
      const double v = history.values(static_cast<long>(t), k);
      if (std::isfinite(v)) {
        taus.push_back(history.tenors[static_cast<std::size_t>(k)].years);
        quotes.push_back(v);
      }
    }
    const long m = static_cast<long>(taus.size());
    if (m < 5) {
      rec.fit_failed = true;
      rec.failure_reason = "fewer than 5 usable quotes";
      records.push_back(std::move(rec));
      continue;
    }

    const MaturityGrid grid(taus);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(quotes.data(), m);

    try {
      const FullFit fit =
          prev_lambda
              ? fit_warm(grid, y, *prev_lambda, config.box, config.sigma,
                         config.delta, config.outer)
              : fit_global(grid, y, config.box, config.sigma, config.delta,
                           config.outer);

      rec.lambda = fit.lambda;
      rec.gamma = fit.inner.gamma;
      rec.beta = fit.inner.beta;
      rec.p = fit.inner.p;
      rec.r44 = fit.inner.r44;
      rec.kappa = fit.inner.kappa;
      rec.used_warm_start = fit.used_warm_start;
      rec.rmse = fit.inner.residual_norm / std::sqrt(static_cast<double>(m));
      rec.sigma_hat = sigma_hat_from_rss(
          fit.inner.residual_norm * fit.inner.residual_norm,
          static_cast<int>(m));
      rec.residuals = y - fit.inner.fitted;

      const OrthoFactorization fact =
          thin_qr_positive(design_matrix(grid, fit.lambda));
      if (prev_lambda) {
        const OrthoFactorization prev_fact =
            thin_qr_positive(design_matrix(grid, *prev_lambda));
        rec.basis_rotation = (prev_fact.psi.transpose() * fact.psi -
                              Eigen::Matrix4d::Identity())
                                 .norm();
      }
      if (fact.degenerate) {
        rec.fisher_std_beta.setConstant(kNaN);
      } else {
        const Eigen::Matrix4d rinv =
            fact.r.triangularView<Eigen::Upper>().solve(
                Eigen::Matrix4d::Identity());
        for (int j = 0; j < 4; ++j)
          rec.fisher_std_beta(j) = rec.sigma_hat * rinv.row(j).norm();
      }
      rec.fisher_std_gamma.setConstant(rec.sigma_hat);

      prev_lambda = fit.lambda;
    } catch (const std::exception& e) {
      rec.fit_failed = true;
      rec.failure_reason = e.what();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

SmoothnessMetrics smoothness_metrics(const std::vector<double>& series) {
  SmoothnessMetrics out;
  if (series.size() < 3) {
    out.undefined = true;
    return out;
  }
  std::vector<double> diffs(series.size() - 1);
  std::vector<double> abs_diffs(series.size() - 1);
  for (std::size_t i = 1; i < series.size(); ++i) {
    diffs[i - 1] = series[i] - series[i - 1];
    abs_diffs[i - 1] = std::abs(diffs[i - 1]);
  }
  const double level_std = sample_std(series);
  const double iqr = interquartile_range(series);
  if (level_std == 0.0 || iqr == 0.0) {
    out.undefined = true;
    return out;
  }
  out.rho = sample_std(diffs) / level_std;
  out.jump = quantile(abs_diffs, 0.95) / iqr;
  return out;
}

SmoothnessReport smoothness(const std::vector<DailyRecord>& records) {
  SmoothnessReport report;
  auto collect = [&](const std::string& name, auto getter) {
    std::vector<double> series;
    for (const auto& rec : records)
      if (!rec.fit_failed) series.push_back(getter(rec));
    report.rows.push_back(SmoothnessRow{name, smoothness_metrics(series)});
  };
  for (int j = 0; j < 4; ++j)
    collect("beta" + std::to_string(j + 1),
            [j](const DailyRecord& r) { return r.beta(j); });
  for (int j = 0; j < 4; ++j)
    collect("gamma" + std::to_string(j + 1),
            [j](const DailyRecord& r) { return r.gamma(j); });
  for (int j = 0; j < 2; ++j)
    collect("lambda" + std::to_string(j + 1),
            [j](const DailyRecord& r) { return r.lambda(j); });
  for (int j = 0; j < 4; ++j) {
    const SmoothnessMetrics& b = report.rows[j].metrics;
    const SmoothnessMetrics& g = report.rows[j + 4].metrics;
    const bool ok = !b.undefined && !g.undefined && g.rho > 0.0 && g.jump > 0.0;
    report.rho_ratio(j) = ok ? b.rho / g.rho : kNaN;
    report.jump_ratio(j) = ok ? b.jump / g.jump : kNaN;
  }
  return report;
}

FitQualityTable fit_quality(const std::vector<DailyRecord>& records) {
  FitQualityTable table;
  std::vector<double> r44;
  std::vector<double> rmse;
  std::vector<double> max_abs;
  const DailyRecord* first_fitted = nullptr;
  bool same_grid = true;
  for (const auto& rec : records) {
    if (rec.fit_failed) continue;
    if (!first_fitted) first_fitted = &rec;
    same_grid = same_grid && rec.residuals.size() ==
                                 first_fitted->residuals.size();
    r44.push_back(rec.r44);
    rmse.push_back(rec.rmse);
    max_abs.push_back(rec.residuals.size()
                          ? rec.residuals.cwiseAbs().maxCoeff()
                          : kNaN);
  }
  if (r44.empty()) {
    table.spearman_rmse_r44 = kNaN;
    return table;
  }
  table.median_rmse = median(rmse);
  table.q95_rmse = quantile(rmse, 0.95);
  table.max_rmse = *std::max_element(rmse.begin(), rmse.end());
  table.median_max_abs_residual = median(max_abs);
  table.median_r44 = median(r44);

  std::vector<double> rmse_low;
  std::vector<double> rmse_high;
  for (std::size_t i = 0; i < r44.size(); ++i) {
    if (r44[i] < table.median_r44)
      rmse_low.push_back(rmse[i]);
    else
      rmse_high.push_back(rmse[i]);
  }
  table.n_low = static_cast<long>(rmse_low.size());
  table.n_high = static_cast<long>(rmse_high.size());
  table.median_rmse_low = rmse_low.empty() ? kNaN : median(rmse_low);
  table.median_rmse_high = rmse_high.empty() ? kNaN : median(rmse_high);
  try {
    table.spearman_rmse_r44 = spearman(rmse, r44);
  } catch (const std::exception&) {
    table.spearman_rmse_r44 = kNaN;
  }

  if (same_grid && first_fitted && first_fitted->residuals.size() > 0) {
    const long m = first_fitted->residuals.size();
    Eigen::VectorXd bias = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(m);
    long n = 0;
    for (const auto& rec : records) {
      if (rec.fit_failed) continue;
      bias += rec.residuals;
      sq += rec.residuals.cwiseAbs2();
      ++n;
    }
    table.tenor_mean_bias.resize(m);
    table.tenor_rmse.resize(m);
    for (long i = 0; i < m; ++i) {
      table.tenor_mean_bias[i] = bias(i) / n;
      table.tenor_rmse[i] = std::sqrt(sq(i) / n);
    }
  }
  return table;
}

FisherBands fisher_bands(const std::vector<DailyRecord>& records) {
  FisherBands bands;
  for (const auto& rec : records)
    if (!rec.fit_failed) bands.dates.push_back(rec.date);
  const long n = static_cast<long>(bands.dates.size());
  bands.beta.resize(n, 4);
  bands.beta_half.resize(n, 4);
  bands.gamma.resize(n, 4);
  bands.gamma_half.resize(n, 4);
  long r = 0;
  for (const auto& rec : records) {
    if (rec.fit_failed) continue;
    bands.beta.row(r) = rec.beta.transpose();
    bands.beta_half.row(r) = 2.0 * rec.fisher_std_beta.transpose();
    bands.gamma.row(r) = rec.gamma.transpose();
    bands.gamma_half.row(r) = 2.0 * rec.fisher_std_gamma.transpose();
    ++r;
  }
  if (n > 0) {
    for (int j = 0; j < 4; ++j) {
      const double mean_beta = bands.beta_half.col(j).mean();
      const double mean_gamma = bands.gamma_half.col(j).mean();
      bands.mean_ratio(j) = mean_gamma > 0.0 ? mean_beta / mean_gamma : kNaN;
    }
  }
  return bands;
}

MonthlyPanel monthly_downsample(const std::vector<DailyRecord>& records) {
  std::vector<std::string> months;
  std::vector<const DailyRecord*> last;
  std::map<std::string, std::size_t> index;
  for (const auto& rec : records) {
    if (rec.fit_failed || rec.date.size() < 7) continue;
    const std::string key = rec.date.substr(0, 7);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, months.size());
      months.push_back(key);
      last.push_back(&rec);
    } else {
      last[it->second] = &rec;
    }
  }
  MonthlyPanel panel;
  panel.months = months;
  const long n = static_cast<long>(months.size());
  panel.beta.resize(n, 4);
  panel.gamma.resize(n, 4);
  panel.lambda.resize(n, 2);
  for (long i = 0; i < n; ++i) {
    panel.beta.row(i) = last[i]->beta.transpose();
    panel.gamma.row(i) = last[i]->gamma.transpose();
    panel.lambda.row(i) = last[i]->lambda.transpose();
  }
  return panel;
}

void write_timeseries_outputs(const std::string& dir,
                              const std::vector<DailyRecord>& records) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw ConfigError("cannot write '" + name + "' in " + dir);
    return out;
  };

  {
    std::ofstream out = open("records.jsonl");
    for (const auto& rec : records) {
      nlohmann::ordered_json j;
      j["date"] = rec.date;
      j["fit_failed"] = rec.fit_failed;
      if (rec.fit_failed) {
        j["failure_reason"] = rec.failure_reason;
        out << j.dump() << "\n";
        continue;
      }
      j["lambda"] = {rec.lambda(0), rec.lambda(1)};
      j["gamma"] = {rec.gamma(0), rec.gamma(1), rec.gamma(2), rec.gamma(3)};
      j["beta"] = {rec.beta(0), rec.beta(1), rec.beta(2), rec.beta(3)};
      j["p"] = rec.p;
      j["r44"] = rec.r44;
      j["kappa"] = rec.kappa;
      j["rmse"] = rec.rmse;
      j["sigma_hat"] = rec.sigma_hat;
      j["used_warm_start"] = rec.used_warm_start;
      if (rec.basis_rotation)
        j["basis_rotation"] = *rec.basis_rotation;
      else
        j["basis_rotation"] = nullptr;
      j["fisher_std_beta"] = {rec.fisher_std_beta(0), rec.fisher_std_beta(1),
                              rec.fisher_std_beta(2), rec.fisher_std_beta(3)};
      j["fisher_std_gamma"] = {
          rec.fisher_std_gamma(0), rec.fisher_std_gamma(1),
          rec.fisher_std_gamma(2), rec.fisher_std_gamma(3)};
      std::vector<double> res(rec.residuals.data(),
                              rec.residuals.data() + rec.residuals.size());
      j["residuals"] = res;
      out << j.dump() << "\n";
    }
  }

  {
    const FitQualityTable t = fit_quality(records);
    std::ofstream out = open("fit_quality.csv");
    out << "stat,value\n";
    out << "median_rmse," << format_double(t.median_rmse) << "\n";
    out << "q95_rmse," << format_double(t.q95_rmse) << "\n";
    out << "max_rmse," << format_double(t.max_rmse) << "\n";
    out << "median_max_abs_residual,"
        << format_double(t.median_max_abs_residual) << "\n";
    out << "median_r44," << format_double(t.median_r44) << "\n";
    out << "n_low_r44," << t.n_low << "\n";
    out << "n_high_r44," << t.n_high << "\n";
    out << "median_rmse_low_r44," << format_double(t.median_rmse_low) << "\n";
    out << "median_rmse_high_r44," << format_double(t.median_rmse_high)
        << "\n";
    out << "spearman_rmse_r44," << format_double(t.spearman_rmse_r44) << "\n";
    for (std::size_t i = 0; i < t.tenor_mean_bias.size(); ++i) {
      out << "tenor" << i + 1 << "_mean_bias,"
          << format_double(t.tenor_mean_bias[i]) << "\n";
      out << "tenor" << i + 1 << "_rmse," << format_double(t.tenor_rmse[i])
          << "\n";
    }
  }

  {
    const SmoothnessReport rep = smoothness(records);
    std::ofstream out = open("smoothness.csv");
    out << "param,rho,jump,undefined\n";
    for (const auto& row : rep.rows)
      out << row.name << ',' << format_double(row.metrics.rho) << ','
          << format_double(row.metrics.jump) << ','
          << (row.metrics.undefined ? 1 : 0) << "\n";
    for (int j = 0; j < 4; ++j)
      out << "ratio_beta_gamma_" << j + 1 << ','
          << format_double(rep.rho_ratio(j)) << ','
          << format_double(rep.jump_ratio(j)) << ",0\n";
  }

  {
    const FisherBands b = fisher_bands(records);
    std::ofstream out = open("bands.csv");
    out << "date";
    for (int j = 1; j <= 4; ++j)
      out << ",beta" << j << ",beta" << j << "_lo,beta" << j << "_hi";
    for (int j = 1; j <= 4; ++j)
      out << ",gamma" << j << ",gamma" << j << "_lo,gamma" << j << "_hi";
    out << "\n";
    for (std::size_t i = 0; i < b.dates.size(); ++i) {
      const long r = static_cast<long>(i);
      out << b.dates[i];
      for (int j = 0; j < 4; ++j)
        out << ',' << format_double(b.beta(r, j)) << ','
            << format_double(b.beta(r, j) - b.beta_half(r, j)) << ','
            << format_double(b.beta(r, j) + b.beta_half(r, j));
      for (int j = 0; j < 4; ++j)
        out << ',' << format_double(b.gamma(r, j)) << ','
            << format_double(b.gamma(r, j) - b.gamma_half(r, j)) << ','
            << format_double(b.gamma(r, j) + b.gamma_half(r, j));
      out << "\n";
    }
  }

  {
    const MonthlyPanel p = monthly_downsample(records);
    std::ofstream out = open("monthly_beta.csv");
    out << "month,beta1,beta2,beta3,beta4\n";
    for (std::size_t i = 0; i < p.months.size(); ++i) {
      out << p.months[i];
      for (int j = 0; j < 4; ++j)
        out << ',' << format_double(p.beta(static_cast<long>(i), j));
      out << "\n";
    }
    std::ofstream out2 = open("monthly_gamma.csv");
    out2 << "month,gamma1,gamma2,gamma3,gamma4\n";
    for (std::size_t i = 0; i < p.months.size(); ++i) {
      out2 << p.months[i];
      for (int j = 0; j < 4; ++j)
        out2 << ',' << format_double(p.gamma(static_cast<long>(i), j));
      out2 << "\n";
    }
  }
}

}  // namespace nss
