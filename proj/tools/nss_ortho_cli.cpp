// Command-line front end for the calibration library. Every subcommand
// writes its outputs under --output-dir: config.json echoes the effective
// settings (no timestamps, so reruns are byte-identical), metadata.json
// carries the run timestamp, and the actual results go to CSV/JSON files
// with full double precision.

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nssortho/changepoint.hpp"
#include "nssortho/covariance.hpp"
#include "nssortho/gram.hpp"
#include "nssortho/identifiability.hpp"
#include "nssortho/parallel.hpp"
#include "nssortho/profiles.hpp"
#include "nssortho/qr.hpp"
#include "nssortho/synthetic.hpp"
#include "nssortho/timeseries.hpp"
#include "nssortho/varpro.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string strf(const char* fmt, ...) {
  char buf[1024];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

// Full-precision decimal form, shortest round trip g++ offers via %.17g.
std::string num(double v) { return strf("%.17g", v); }

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

std::vector<std::vector<double>> to_mat(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows[i].resize(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  }
  return rows;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_json_file(const fs::path& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_metadata(const fs::path& dir) {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);
  ordered_json j;
  j["timestamp"] = stamp;
  j["exec_mode"] = nss::exec_mode_name();
  j["threads"] = nss::max_threads();
  write_json_file(dir / "metadata.json", j);
}

// "3M"/"10Y" style label or a plain number of years.
double tenor_years(const std::string& token) {
  if (token.empty()) throw std::invalid_argument("empty tenor");
  char suffix = token.back();
  if (suffix == 'M' || suffix == 'm' || suffix == 'Y' || suffix == 'y') {
    std::size_t pos = 0;
    double n = std::stod(token.substr(0, token.size() - 1), &pos);
    if (pos != token.size() - 1 || !(n > 0))
      throw std::invalid_argument("bad tenor '" + token + "'");
    return (suffix == 'M' || suffix == 'm') ? n / 12.0 : n;
  }
  std::size_t pos = 0;
  double years = std::stod(token, &pos);
  if (pos != token.size() || !(years > 0))
    throw std::invalid_argument("bad tenor '" + token + "'");
  return years;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? "" : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

struct Curve {
  std::vector<std::string> labels;
  nss::MaturityGrid grid{{1.0}};
  Eigen::VectorXd y;
  std::string source;
};

Curve make_curve(std::vector<std::string> labels, std::vector<double> years,
                 std::vector<double> yields, const std::string& source) {
  std::vector<std::size_t> order(years.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return years[a] < years[b]; });
  Curve c;
  std::vector<double> taus;
  c.y.resize(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    c.labels.push_back(labels[order[i]]);
    taus.push_back(years[order[i]]);
    c.y(static_cast<Eigen::Index>(i)) = yields[order[i]];
  }
  c.grid = nss::MaturityGrid(std::move(taus));  // rejects duplicates
  c.source = source;
  return c;
}

// Two-column CSV `tenor,yield`, yields in decimals (0.042 = 4.2%).
Curve load_curve(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nss::ParseError("cannot open " + path, 0);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw nss::ParseError("empty file", 0);
  ++line_no;
  auto header = split_csv_line(line);
  if (header.size() != 2 || header[0] != "tenor" || header[1] != "yield")
    throw nss::ParseError("expected header 'tenor,yield'", line_no);
  std::vector<std::string> labels;
  std::vector<double> years, yields;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw nss::ParseError("expected 2 fields", line_no);
    try {
      years.push_back(tenor_years(fields[0]));
      std::size_t pos = 0;
      yields.push_back(std::stod(fields[1], &pos));
      if (pos != fields[1].size()) throw std::invalid_argument(fields[1]);
    } catch (const std::exception&) {
      throw nss::ParseError("bad row '" + line + "'", line_no);
    }
    labels.push_back(fields[0]);
  }
  if (years.size() < 6)
    throw nss::ParseError("need at least 6 quotes to calibrate", line_no);
  try {
    return make_curve(labels, years, yields, path);
  } catch (const std::domain_error& e) {
    throw nss::ParseError(e.what(), line_no);
  }
}

struct CommonOpts {
  std::string output_dir;
  double sigma = 5e-5;
  double delta = 5e-4;
  std::uint64_t seed = 20260816;
  std::vector<double> lambda_box;  // lo1,lo2,hi1,hi2 when given
  std::string model = "auto";
  std::string input;
  std::vector<std::string> tenors;
  std::vector<double> yields;  // inline curve values, positional
  std::string from_date;
  std::string to_date;
  long kmax = 10;
  double horizon = 30.0;
  CLI::Option* box_opt = nullptr;
};

nss::LambdaBox resolve_box(const CommonOpts& o) {
  nss::LambdaBox box;
  if (o.box_opt != nullptr && o.box_opt->count() > 0) {
    box.lo = Eigen::Vector2d(o.lambda_box[0], o.lambda_box[1]);
    box.hi = Eigen::Vector2d(o.lambda_box[2], o.lambda_box[3]);
  }
  box.validate();
  return box;
}

// --model picks the working column count through the pivot threshold:
// `ns` drops the second rate factor unconditionally, `nss` keeps it, and
// `auto` leaves the data-driven rule at the user's sigma/delta.
double resolve_delta(const CommonOpts& o) {
  if (!(o.sigma > 0)) throw nss::ConfigError("--sigma must be positive");
  if (o.model == "ns") return o.sigma * 10.0;
  if (o.model == "nss") return 1e300;
  if (!(o.delta > 0)) throw nss::ConfigError("--delta must be positive");
  return o.delta;
}

ordered_json base_config(const std::string& subcommand, const CommonOpts& o) {
  ordered_json j;
  j["subcommand"] = subcommand;
  j["output_dir"] = o.output_dir;
  return j;
}

void add_fit_config(ordered_json& j, const CommonOpts& o,
                    const nss::LambdaBox& box) {
  j["sigma"] = o.sigma;
  j["delta"] = o.delta;
  j["model"] = o.model;
  j["effective_delta"] = resolve_delta(o);
  j["lambda_box"] = {box.lo(0), box.lo(1), box.hi(0), box.hi(1)};
  j["seed"] = o.seed;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

Curve resolve_curve(const CommonOpts& o, bool allow_synthetic) {
  if (!o.input.empty()) return load_curve(o.input);
  if (!o.tenors.empty()) {
    if (o.tenors.size() != o.yields.size())
      throw nss::ConfigError(
          strf("--tenors lists %zu tenors but %zu yields were given",
               o.tenors.size(), o.yields.size()));
    if (o.tenors.size() < 6)
      throw nss::ConfigError("need at least 6 quotes to calibrate");
    std::vector<double> years;
    for (const auto& t : o.tenors) years.push_back(tenor_years(t));
    return make_curve(o.tenors, years, o.yields, "inline");
  }
  if (!allow_synthetic)
    throw nss::ConfigError("provide --input FILE or --tenors plus yields");
  auto sc = nss::generate(nss::Regime::near_degenerate, o.sigma, o.seed);
  Curve c;
  c.grid = sc.grid;
  c.y = sc.y;
  for (double t : sc.grid.taus()) c.labels.push_back(num(t));
  c.source = "synthetic:" + nss::regime_name(nss::Regime::near_degenerate);
  return c;
}

void curve_config(ordered_json& j, const Curve& c) {
  j["input"] = c.source;
  j["tenors"] = c.labels;
  j["maturities_years"] = c.grid.taus();
  j["yields"] = to_vec(c.y);
}

// ---------------------------------------------------------------- fit ----

int run_fit(const CommonOpts& o) {
  Curve curve = resolve_curve(o, false);
  nss::LambdaBox box = resolve_box(o);
  double delta = resolve_delta(o);
  auto dir = prepare_dir(o.output_dir);

  ordered_json cfg = base_config("fit", o);
  add_fit_config(cfg, o, box);
  curve_config(cfg, curve);
  write_json_file(dir / "config.json", cfg);

  nss::FullFit fit = nss::fit_global(curve.grid, curve.y, box, o.sigma, delta);
  const auto& inner = fit.inner;
  int m = static_cast<int>(curve.grid.size());
  double rss = inner.residual_norm * inner.residual_norm;

  ordered_json rep;
  rep["lambda"] = {fit.lambda(0), fit.lambda(1)};
  rep["beta"] = to_vec(inner.beta);
  rep["gamma"] = to_vec(inner.gamma);
  rep["p"] = inner.p;
  rep["r44"] = inner.r44;
  rep["kappa"] = inner.kappa;
  rep["objective"] = fit.objective;
  rep["iterations"] = fit.iterations;
  rep["rss"] = rss;
  rep["rmse"] = inner.residual_norm / std::sqrt(static_cast<double>(m));
  rep["sigma_hat"] = m > 4 ? nss::sigma_hat_from_rss(rss, m) : 0.0;
  rep["fitted"] = to_vec(inner.fitted);
  rep["residuals"] = to_vec(curve.y - inner.fitted);

  nss::NssParams at{inner.beta, fit.lambda};
  auto ident = nss::rank_analysis(at, curve.grid);
  rep["identifiability"]["rank"] = ident.rank;
  rep["identifiability"]["singular_values"] = to_vec(ident.singular_values);
  rep["identifiability"]["identifiable_quantities"] =
      ident.identifiable_quantities;

  // Covariance blocks at the configured sigma. Near the degenerate set the
  // delta-method recovery is not trustworthy; report the failure instead.
  try {
    auto fact = nss::thin_qr_positive(nss::design_matrix(curve.grid, fit.lambda));
    auto g = nss::nonlinear_sensitivities(fit.lambda, inner.gamma, curve.grid,
                                          nss::DerivativeMethod::analytic);
    auto joint = nss::full_covariance(fact, g, o.sigma);
    rep["covariance"]["gamma"] = to_mat(joint.cov_gamma);
    rep["covariance"]["lambda"] = to_mat(joint.cov_lambda);
    rep["covariance"]["cross_gamma_lambda"] = to_mat(joint.cross);
    auto bc = nss::beta_cov_delta(fact, curve.grid, fit.lambda, inner.beta,
                                  joint, nss::DerivativeMethod::analytic);
    rep["covariance"]["beta"] = to_mat(bc.cov_beta);
    rep["covariance"]["conditioning_warning"] = bc.conditioning_warning;
  } catch (const std::exception& e) {
    rep["covariance_error"] = e.what();
  }
  write_json_file(dir / "fit.json", rep);
  write_metadata(dir);

  std::cout << strf("fit: m=%d p=%d lambda=(%.6g, %.6g)\n", m, inner.p,
                    fit.lambda(0), fit.lambda(1))
            << strf("  beta  = (%.6g, %.6g, %.6g, %.6g)\n", inner.beta(0),
                    inner.beta(1), inner.beta(2), inner.beta(3))
            << strf("  rmse  = %.4g bp   kappa = %.4g   |r44| = %.4g\n",
                    1e4 * inner.residual_norm / std::sqrt(double(m)),
                    inner.kappa, std::abs(inner.r44))
            << strf("  rank  = %d   evaluations = %ld\n", ident.rank,
                    fit.iterations)
            << "  wrote " << (dir / "fit.json").string() << '\n';
  return 0;
}

// ------------------------------------------------------------- table1 ----

int run_table1(const CommonOpts& o) {
  auto dir = prepare_dir(o.output_dir);
  ordered_json cfg = base_config("table1", o);
  cfg["sigma"] = o.sigma;
  write_json_file(dir / "config.json", cfg);

  auto rows = nss::table1_report(o.sigma);
  {
    auto out = open_out(dir / "table1.csv");
    out << "label,lambda2,kappa,r44,std_beta1,std_beta2,std_beta3,std_beta4,"
           "std_gamma,max_abs_corr\n";
    for (const auto& r : rows) {
      out << r.label << ',' << num(r.lambda2) << ',' << num(r.kappa) << ','
          << num(r.r44);
      for (int j = 0; j < 4; ++j) out << ',' << num(r.std_beta(j));
      out << ',' << num(r.std_gamma) << ',' << num(r.max_abs_corr) << '\n';
    }
  }
  write_metadata(dir);

  std::cout << "conditioning at sigma = " << strf("%.3g", o.sigma)
            << " (standard errors in bp)\n"
            << strf("%-16s %8s %8s %9s %9s %9s %9s %9s %9s\n", "case",
                    "kappa", "|r44|", "sd(b1)", "sd(b2)", "sd(b3)", "sd(b4)",
                    "sd(g)", "corr");
  for (const auto& r : rows)
    std::cout << strf("%-16s %8.2f %8.4f %9.3f %9.3f %9.3f %9.3f %9.3f %9.3f\n",
                      r.label.c_str(), r.kappa, r.r44, 1e4 * r.std_beta(0),
                      1e4 * r.std_beta(1), 1e4 * r.std_beta(2),
                      1e4 * r.std_beta(3), 1e4 * r.std_gamma, r.max_abs_corr);
  std::cout << "  wrote " << (dir / "table1.csv").string() << '\n';
  return 0;
}

// ------------------------------------------------------------- sweeps ----

int run_sweeps(const CommonOpts& o) {
  // The first box component pins lambda1; the second sweeps [lo2, hi2].
  double l1 = 0.6, lo2 = 0.02, hi2 = 1.2;
  if (o.box_opt != nullptr && o.box_opt->count() > 0) {
    l1 = o.lambda_box[0];
    lo2 = o.lambda_box[1];
    hi2 = o.lambda_box[3];
    if (!(l1 > 0) || !(lo2 > 0) || !(hi2 > lo2))
      throw nss::ConfigError("sweeps needs 0 < lo2 < hi2 and lambda1 > 0");
  }
  nss::MaturityGrid grid = nss::MaturityGrid::us_treasury_12();
  std::vector<std::string> labels;
  if (!o.tenors.empty()) {
    std::vector<double> years;
    for (const auto& t : o.tenors) years.push_back(tenor_years(t));
    std::sort(years.begin(), years.end());
    grid = nss::MaturityGrid(years);
    labels = o.tenors;
  }
  auto dir = prepare_dir(o.output_dir);
  ordered_json cfg = base_config("sweeps", o);
  cfg["lambda1"] = l1;
  cfg["lambda2_range"] = {lo2, hi2};
  cfg["maturities_years"] = grid.taus();
  write_json_file(dir / "config.json", cfg);

  auto sweep = nss::r44_sweep(l1, lo2, hi2, 240);
  {
    auto out = open_out(dir / "sweep_r44.csv");
    out << "lambda2,r44,kappa\n";
    for (const auto& r : sweep)
      out << num(r.lambda2) << ',' << num(r.r44) << ',' << num(r.kappa)
          << '\n';
  }

  double mlo = std::min(l1, lo2), mhi = std::max(l1, hi2);
  auto cmap = nss::condition_map(grid, mlo, mhi, 61);
  {
    auto out = open_out(dir / "condition_map.csv");
    out << "lambda1,lambda2,log10_kappa\n";
    for (std::size_t i = 0; i < cmap.lambda1.size(); ++i)
      for (std::size_t j = 0; j < cmap.lambda2.size(); ++j)
        out << num(cmap.lambda1[i]) << ',' << num(cmap.lambda2[j]) << ','
            << num(cmap.log10_kappa(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(j)))
            << '\n';
  }
  write_metadata(dir);

  auto worst = std::max_element(
      sweep.begin(), sweep.end(),
      [](const auto& a, const auto& b) { return a.kappa < b.kappa; });
  std::cout << strf("swept lambda2 in [%.4g, %.4g] at lambda1 = %.4g (%zu points)\n",
                    lo2, hi2, l1, sweep.size())
            << strf("  worst kappa %.4g at lambda2 = %.4g\n", worst->kappa,
                    worst->lambda2)
            << "  wrote " << (dir / "sweep_r44.csv").string() << ", "
            << (dir / "condition_map.csv").string() << '\n';
  return 0;
}

// --------------------------------------------------------------- gram ----

int run_gram(const CommonOpts& o) {
  Eigen::Vector2d lambda(0.6, 0.3);
  if (o.box_opt != nullptr && o.box_opt->count() > 0)
    lambda = Eigen::Vector2d(0.5 * (o.lambda_box[0] + o.lambda_box[2]),
                             0.5 * (o.lambda_box[1] + o.lambda_box[3]));
  if (!(lambda(0) > 0) || !(lambda(1) > 0) || !(o.horizon > 0))
    throw nss::ConfigError("gram needs positive rates and --horizon");

  auto dir = prepare_dir(o.output_dir);
  ordered_json cfg = base_config("gram", o);
  cfg["lambda"] = {lambda(0), lambda(1)};
  cfg["horizon"] = o.horizon;
  write_json_file(dir / "config.json", cfg);

  auto gm = nss::gram_matrix(lambda, o.horizon);
  auto cb = nss::continuous_basis(lambda, o.horizon);
  {
    auto out = open_out(dir / "gram.csv");
    out << "i,j,value\n";
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        out << i + 1 << ',' << j + 1 << ',' << num(gm.g(i, j)) << '\n';
  }
  {
    auto out = open_out(dir / "continuous_r.csv");
    out << "i,j,value\n";
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        out << i + 1 << ',' << j + 1 << ',' << num(cb.r_t(i, j)) << '\n';
  }
  {
    Eigen::Matrix3d ginf = nss::decaying_gram_infinite(lambda);
    auto out = open_out(dir / "gram_infinite.csv");
    out << "i,j,value\n";
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        out << i + 2 << ',' << j + 2 << ',' << num(ginf(i, j)) << '\n';
  }
  {
    auto bc = nss::basis_curves(lambda, o.horizon);
    auto out = open_out(dir / "basis.csv");
    out << "tau,raw1,raw2,raw3,raw4,ortho1,ortho2,ortho3,ortho4\n";
    for (std::size_t i = 0; i < bc.taus.size(); ++i) {
      out << num(bc.taus[i]);
      auto ii = static_cast<Eigen::Index>(i);
      for (int j = 0; j < 4; ++j) out << ',' << num(bc.raw(ii, j));
      for (int j = 0; j < 4; ++j) out << ',' << num(bc.ortho(ii, j));
      out << '\n';
    }
  }
  write_metadata(dir);

  std::cout << strf("gram at lambda = (%.6g, %.6g), horizon %.4g\n", lambda(0),
                    lambda(1), o.horizon)
            << strf("  continuous |R44| = %.6g%s\n", std::abs(cb.r_t(3, 3)),
                    cb.degenerate ? " (degenerate)" : "")
            << "  wrote gram.csv, continuous_r.csv, gram_infinite.csv, "
               "basis.csv under "
            << dir.string() << '\n';
  return 0;
}

// ----------------------------------------------------------- profiles ----

void append_profile(std::ofstream& out, const nss::ProfileCurve& c) {
  std::string name = nss::param_name(c.param);
  for (std::size_t i = 0; i < c.values.size(); ++i)
    out << name << ',' << (c.conditional ? 1 : 0) << ',' << num(c.values[i])
        << ',' << num(c.dnll[i]) << ',' << (c.missing[i] ? 1 : 0) << '\n';
}

void append_intervals(std::ofstream& out, const nss::ProfileCurve& c,
                      double level) {
  auto set = nss::confidence_interval(c, level);
  std::string name = nss::param_name(c.param);
  for (const auto& [lo, hi] : set.intervals)
    out << name << ',' << num(level) << ',' << num(lo) << ',' << num(hi)
        << ',' << (set.unbounded ? 1 : 0) << '\n';
  if (set.intervals.empty())
    out << name << ',' << num(level) << ",,," << (set.unbounded ? 1 : 0)
        << '\n';
}

int run_profiles(const CommonOpts& o) {
  Curve curve = resolve_curve(o, true);
  nss::LambdaBox box = resolve_box(o);
  double delta = resolve_delta(o);
  auto dir = prepare_dir(o.output_dir);

  ordered_json cfg = base_config("profiles", o);
  add_fit_config(cfg, o, box);
  curve_config(cfg, curve);
  write_json_file(dir / "config.json", cfg);

  nss::FullFit fit = nss::fit_global(curve.grid, curve.y, box, o.sigma, delta);
  auto phi = nss::design_matrix(curve.grid, fit.lambda);
  auto fact = nss::thin_qr_positive(phi);
  auto beta_cov = nss::conditional_beta_cov(phi, o.sigma);

  auto curves_out = open_out(dir / "profiles.csv");
  curves_out << "param,conditional,value,dnll,missing\n";
  auto intervals_out = open_out(dir / "intervals.csv");
  intervals_out << "param,level,lo,hi,unbounded\n";

  std::cout << strf("profiles at lambda = (%.6g, %.6g), p = %d\n",
                    fit.lambda(0), fit.lambda(1), fit.inner.p);
  for (int j = 0; j < 4; ++j) {
    double sd = std::sqrt(beta_cov.cov(j, j));
    auto values = nss::profile_grid(fit.inner.beta(j), sd);
    auto curve_j =
        nss::conditional_profile_beta(j, phi, curve.y, o.sigma, values);
    append_profile(curves_out, curve_j);
    append_intervals(intervals_out, curve_j, 0.95);
    std::cout << strf("  beta%d  = %11.6g  sd = %.4g  (vif %.3g)\n", j + 1,
                      curve_j.mle, sd, curve_j.vif.value_or(1.0));
  }
  for (int j = 0; j < 4; ++j) {
    auto values = nss::profile_grid(fit.inner.gamma(j), o.sigma);
    auto curve_j =
        nss::conditional_profile_gamma(j, fact, curve.y, o.sigma, values);
    append_profile(curves_out, curve_j);
    append_intervals(intervals_out, curve_j, 0.95);
    std::cout << strf("  gamma%d = %11.6g  sd = %.4g\n", j + 1, curve_j.mle,
                      o.sigma);
  }

  // Rate profiles re-optimize everything else at each fixed value, so keep
  // the grids short. Half-width from the joint covariance when it exists,
  // else a 20% band around the estimate.
  Eigen::Vector2d lambda_sd(0.2 * fit.lambda(0), 0.2 * fit.lambda(1));
  try {
    auto g = nss::nonlinear_sensitivities(fit.lambda, fit.inner.gamma,
                                          curve.grid,
                                          nss::DerivativeMethod::analytic);
    auto joint = nss::full_covariance(fact, g, o.sigma);
    for (int j = 0; j < 2; ++j) {
      double sd = std::sqrt(joint.cov_lambda(j, j));
      if (std::isfinite(sd) && sd > 0 && 5 * sd < fit.lambda(j))
        lambda_sd(j) = sd;
    }
  } catch (const std::exception&) {
  }
  for (int j = 0; j < 2; ++j) {
    auto values = nss::profile_grid(fit.lambda(j), lambda_sd(j), 41);
    std::vector<double> kept;
    for (double v : values)
      if (v > box.lo(j) && v < box.hi(j)) kept.push_back(v);
    auto curve_j =
        nss::full_profile({nss::ParamKind::lambda, j}, curve.grid, curve.y,
                          o.sigma, kept, box);
    append_profile(curves_out, curve_j);
    append_intervals(intervals_out, curve_j, 0.95);
    std::cout << strf("  lambda%d profile over [%.4g, %.4g]%s\n", j + 1,
                      kept.front(), kept.back(),
                      curve_j.flat ? " (flat)" : "");
  }
  write_metadata(dir);
  std::cout << "  wrote " << (dir / "profiles.csv").string() << ", "
            << (dir / "intervals.csv").string() << '\n';
  return 0;
}

// ---------------------------------------------------------- landscape ----

void write_landscape(const fs::path& dir, const std::string& stem,
                     const nss::Landscape2D& land) {
  {
    auto out = open_out(dir / (stem + ".csv"));
    out << "axis1,axis2,dnll\n";
    for (std::size_t i = 0; i < land.axis1.size(); ++i)
      for (std::size_t j = 0; j < land.axis2.size(); ++j)
        out << num(land.axis1[i]) << ',' << num(land.axis2[j]) << ','
            << num(land.dnll(static_cast<Eigen::Index>(i),
                             static_cast<Eigen::Index>(j)))
            << '\n';
  }
  auto out = open_out(dir / (stem + "_profiles.csv"));
  out << "axis,value,dnll\n";
  for (std::size_t i = 0; i < land.axis1.size(); ++i)
    out << "1," << num(land.axis1[i]) << ',' << num(land.profile1[i]) << '\n';
  for (std::size_t j = 0; j < land.axis2.size(); ++j)
    out << "2," << num(land.axis2[j]) << ',' << num(land.profile2[j]) << '\n';
}

int run_landscape(const CommonOpts& o) {
  Curve curve = resolve_curve(o, true);
  nss::LambdaBox box = resolve_box(o);
  double delta = resolve_delta(o);
  auto dir = prepare_dir(o.output_dir);

  ordered_json cfg = base_config("landscape", o);
  add_fit_config(cfg, o, box);
  curve_config(cfg, curve);
  write_json_file(dir / "config.json", cfg);

  nss::FullFit fit = nss::fit_global(curve.grid, curve.y, box, o.sigma, delta);
  auto phi = nss::design_matrix(curve.grid, fit.lambda);
  auto beta_cov = nss::conditional_beta_cov(phi, o.sigma);

  nss::LandscapeRanges br;
  br.n1 = br.n2 = 101;
  for (int a = 0; a < 2; ++a) {
    double sd = std::sqrt(beta_cov.cov(2 + a, 2 + a));
    if (!(std::isfinite(sd) && sd > 0)) sd = 0.05;
    br.lo(a) = fit.inner.beta(2 + a) - 5 * sd;
    br.hi(a) = fit.inner.beta(2 + a) + 5 * sd;
  }
  auto beta_land = nss::landscape_2d(nss::LandscapePair::beta34, curve.grid,
                                     curve.y, o.sigma, fit.lambda, br);
  write_landscape(dir, "landscape_beta34", beta_land);

  nss::LandscapeRanges gr;
  gr.n1 = gr.n2 = 101;
  for (int a = 0; a < 2; ++a) {
    gr.lo(a) = fit.inner.gamma(2 + a) - 5 * o.sigma;
    gr.hi(a) = fit.inner.gamma(2 + a) + 5 * o.sigma;
  }
  auto gamma_land = nss::landscape_2d(nss::LandscapePair::gamma34, curve.grid,
                                      curve.y, o.sigma, fit.lambda, gr);
  write_landscape(dir, "landscape_gamma34", gamma_land);
  write_metadata(dir);

  std::cout << strf("landscapes at lambda = (%.6g, %.6g)\n", fit.lambda(0),
                    fit.lambda(1))
            << strf("  beta34 window  [%.6g, %.6g] x [%.6g, %.6g]\n", br.lo(0),
                    br.hi(0), br.lo(1), br.hi(1))
            << strf("  gamma34 window [%.6g, %.6g] x [%.6g, %.6g]\n", gr.lo(0),
                    gr.hi(0), gr.lo(1), gr.hi(1))
            << "  wrote landscape_beta34.csv, landscape_gamma34.csv under "
            << dir.string() << '\n';
  return 0;
}

// ----------------------------------------------------------- treasury ----

nss::YieldHistory window(const nss::YieldHistory& h, const std::string& from,
                         const std::string& to) {
  nss::YieldHistory out;
  out.tenors = h.tenors;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < h.dates.size(); ++i) {
    if (!from.empty() && h.dates[i] < from) continue;
    if (!to.empty() && h.dates[i] > to) continue;
    out.dates.push_back(h.dates[i]);
    keep.push_back(static_cast<Eigen::Index>(i));
  }
  out.values.resize(static_cast<Eigen::Index>(keep.size()), h.values.cols());
  for (std::size_t r = 0; r < keep.size(); ++r)
    out.values.row(static_cast<Eigen::Index>(r)) = h.values.row(keep[r]);
  return out;
}

int run_treasury(const CommonOpts& o) {
  if (o.input.empty()) throw nss::ConfigError("treasury needs --input FILE");
  std::vector<std::string> selection =
      o.tenors.empty() ? nss::default_tenor_selection() : o.tenors;
  auto history = nss::load_history(o.input, selection);
  history = window(history, o.from_date, o.to_date);
  if (history.dates.empty())
    throw nss::ConfigError("no rows left after the --from/--to window");

  nss::TimeseriesConfig cfg_ts;
  cfg_ts.box = resolve_box(o);
  cfg_ts.sigma = o.sigma;
  cfg_ts.delta = resolve_delta(o);

  auto dir = prepare_dir(o.output_dir);
  ordered_json cfg = base_config("treasury", o);
  cfg["input"] = o.input;
  cfg["tenors"] = selection;
  cfg["from"] = o.from_date;
  cfg["to"] = o.to_date;
  cfg["days"] = history.dates.size();
  add_fit_config(cfg, o, cfg_ts.box);
  write_json_file(dir / "config.json", cfg);

  auto records = nss::run_daily(history, cfg_ts);
  nss::write_timeseries_outputs(dir.string(), records);
  write_metadata(dir);

  long failed = 0, warm = 0;
  for (const auto& r : records) {
    failed += r.fit_failed ? 1 : 0;
    warm += r.used_warm_start ? 1 : 0;
  }
  if (failed == static_cast<long>(records.size())) {
    std::cerr << "error: every day failed to fit\n";
    return 2;
  }
  auto fq = nss::fit_quality(records);
  auto sm = nss::smoothness(records);
  auto monthly = nss::monthly_downsample(records);

  std::cout << strf("treasury: %zu days (%s .. %s), %ld failed, %ld warm starts\n",
                    records.size(), records.front().date.c_str(),
                    records.back().date.c_str(), failed, warm)
            << strf("  rmse median %.3f bp, q95 %.3f bp, max %.3f bp\n",
                    1e4 * fq.median_rmse, 1e4 * fq.q95_rmse, 1e4 * fq.max_rmse)
            << strf("  median |r44| %.4f; rmse by half: %.3f bp (low) vs %.3f bp (high)\n",
                    fq.median_r44, 1e4 * fq.median_rmse_low,
                    1e4 * fq.median_rmse_high)
            << strf("  roughness ratio beta/gamma: %.2f %.2f %.2f %.2f\n",
                    sm.rho_ratio(0), sm.rho_ratio(1), sm.rho_ratio(2),
                    sm.rho_ratio(3))
            << strf("  %zu months downsampled\n", monthly.months.size())
            << "  wrote records.jsonl, fit_quality.csv, smoothness.csv, "
               "bands.csv, monthly_*.csv under "
            << dir.string() << '\n';
  return 0;
}

// -------------------------------------------------------- changepoint ----

// Reads the monthly panel format written by the treasury subcommand:
// `month,<col>,...` with one label column followed by numeric columns.
std::pair<std::vector<std::string>, Eigen::MatrixXd> load_panel(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nss::ParseError("cannot open " + path, 0);
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw nss::ParseError("empty file", 0);
  ++line_no;
  auto header = split_csv_line(line);
  if (header.size() < 2)
    throw nss::ParseError("expected a label column plus data columns",
                          line_no);
  std::size_t cols = header.size() - 1;
  std::vector<std::string> labels;
  std::vector<double> flat;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (fields.size() != cols + 1)
      throw nss::ParseError(strf("expected %zu fields", cols + 1), line_no);
    labels.push_back(fields[0]);
    for (std::size_t j = 1; j < fields.size(); ++j) {
      try {
        std::size_t pos = 0;
        flat.push_back(std::stod(fields[j], &pos));
        if (pos != fields[j].size()) throw std::invalid_argument(fields[j]);
      } catch (const std::exception&) {
        throw nss::ParseError("bad value '" + fields[j] + "'", line_no);
      }
    }
  }
  if (labels.size() < 2)
    throw nss::ParseError("need at least 2 rows to segment", line_no);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(labels.size()),
                    static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          flat[i * cols + j];
  return {labels, x};
}

int run_changepoint(const CommonOpts& o) {
  if (o.input.empty())
    throw nss::ConfigError("changepoint needs --input FILE");
  if (o.kmax < 1) throw nss::ConfigError("--kmax must be at least 1");
  auto [labels, x] = load_panel(o.input);
  long kmax = std::min<long>(o.kmax, x.rows() - 1);

  auto dir = prepare_dir(o.output_dir);
  ordered_json cfg = base_config("changepoint", o);
  cfg["input"] = o.input;
  cfg["kmax"] = kmax;
  cfg["rows"] = labels.size();
  cfg["columns"] = x.cols();
  write_json_file(dir / "config.json", cfg);

  auto seg = nss::dp_segment(nss::standardize_columns(x), kmax);
  {
    auto out = open_out(dir / "cost_path.csv");
    out << "k,sse,selected\n";
    for (std::size_t k = 0; k < seg.cost_path.size(); ++k)
      out << k << ',' << num(seg.cost_path[k]) << ','
          << (static_cast<long>(k) == seg.k ? 1 : 0) << '\n';
  }
  {
    auto out = open_out(dir / "breakpoints.csv");
    out << "k,order,row,label\n";
    for (std::size_t k = 0; k < seg.breakpoints_per_k.size(); ++k) {
      const auto& bps = seg.breakpoints_per_k[k];
      for (std::size_t i = 0; i < bps.size(); ++i)
        out << k << ',' << i + 1 << ',' << bps[i] << ','
            << labels[static_cast<std::size_t>(bps[i])] << '\n';
    }
  }
  write_metadata(dir);

  std::cout << strf("changepoint: %zu rows x %ld columns, k up to %ld\n",
                    labels.size(), static_cast<long>(x.cols()), kmax)
            << strf("  selected k = %ld (sse %.6g)\n", seg.k, seg.sse);
  for (long b : seg.breakpoints)
    std::cout << "    segment starts at " << labels[static_cast<std::size_t>(b)]
              << " (row " << b << ")\n";
  std::cout << "  wrote " << (dir / "cost_path.csv").string() << ", "
            << (dir / "breakpoints.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Yield-curve calibration in an orthonormalized Nelson-Siegel-"
               "Svensson basis"};
  app.require_subcommand(1);

  CommonOpts o;

  auto add_common = [&](CLI::App* sub, const std::string& name) {
    o.output_dir = "";
    sub->add_option("--output-dir", o.output_dir, "Output directory")
        ->default_val("nss_out/" + name);
    return sub;
  };
  auto add_box = [&](CLI::App* sub) {
    o.box_opt = sub->add_option("--lambda-box", o.lambda_box,
                                "Rate bounds lo1,lo2,hi1,hi2")
                    ->expected(4)
                    ->delimiter(',');
  };
  auto add_noise = [&](CLI::App* sub) {
    sub->add_option("--sigma", o.sigma, "Observation noise (decimal)")
        ->capture_default_str();
    sub->add_option("--delta", o.delta, "Pivot threshold scale")
        ->capture_default_str();
    sub->add_option("--model", o.model, "Column rule: ns, nss or auto")
        ->check(CLI::IsMember({"ns", "nss", "auto"}))
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  };
  auto add_curve_source = [&](CLI::App* sub, bool inline_yields) {
    auto* in = sub->add_option("--input", o.input,
                               "Curve CSV with header tenor,yield "
                               "(yields in decimals)");
    auto* ten = sub->add_option("--tenors", o.tenors,
                                "Comma-separated tenor labels, e.g. 3M,2Y,10Y")
                    ->delimiter(',');
    in->excludes(ten);
    if (inline_yields)
      sub->add_option("yields", o.yields,
                      "Inline decimal yields matching --tenors");
  };

  auto* fit = add_common(app.add_subcommand("fit", "Calibrate one curve"),
                         "fit");
  add_curve_source(fit, true);
  add_box(fit);
  add_noise(fit);

  auto* table1 = add_common(
      app.add_subcommand("table1", "Conditioning reference table"), "table1");
  table1->add_option("--sigma", o.sigma, "Observation noise (decimal)")
      ->capture_default_str();

  auto* sweeps = add_common(
      app.add_subcommand("sweeps",
                         "Pivot and condition-number sweeps over the rates"),
      "sweeps");
  add_box(sweeps);
  sweeps->add_option("--tenors", o.tenors, "Maturity grid labels")
      ->delimiter(',');

  auto* profiles = add_common(
      app.add_subcommand("profiles", "Likelihood profiles around a fit"),
      "profiles");
  add_curve_source(profiles, false);
  add_box(profiles);
  add_noise(profiles);

  auto* landscape = add_common(
      app.add_subcommand("landscape", "dNLL surfaces over coefficient pairs"),
      "landscape");
  add_curve_source(landscape, false);
  add_box(landscape);
  add_noise(landscape);

  auto* gram = add_common(
      app.add_subcommand("gram", "Continuous Gram matrix and basis shapes"),
      "gram");
  add_box(gram);
  gram->add_option("--horizon", o.horizon, "Integration horizon in years")
      ->capture_default_str();

  auto* treasury = add_common(
      app.add_subcommand("treasury", "Daily calibration of a yield panel"),
      "treasury");
  treasury->add_option("--input", o.input,
                       "History CSV: date column plus tenor columns in percent");
  treasury->add_option("--tenors", o.tenors, "Tenor selection")
      ->delimiter(',');
  treasury->add_option("--from", o.from_date, "First date (YYYY-MM-DD)");
  treasury->add_option("--to", o.to_date, "Last date (YYYY-MM-DD)");
  add_box(treasury);
  add_noise(treasury);

  auto* changepoint = add_common(
      app.add_subcommand("changepoint", "Segment a monthly parameter panel"),
      "changepoint");
  changepoint->add_option("--input", o.input,
                          "Panel CSV: label column plus numeric columns");
  changepoint->add_option("--kmax", o.kmax, "Largest breakpoint count")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(fit)) return run_fit(o);
    if (app.got_subcommand(table1)) return run_table1(o);
    if (app.got_subcommand(sweeps)) return run_sweeps(o);
    if (app.got_subcommand(profiles)) return run_profiles(o);
    if (app.got_subcommand(landscape)) return run_landscape(o);
    if (app.got_subcommand(gram)) return run_gram(o);
    if (app.got_subcommand(treasury)) return run_treasury(o);
    if (app.got_subcommand(changepoint)) return run_changepoint(o);
  } catch (const nss::OptimizationFailedError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
