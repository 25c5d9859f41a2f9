#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nss {

// Linear-interpolation quantile on sorted data (the common "type 7" rule).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (!(q >= 0.0) || !(q <= 1.0))
    throw std::invalid_argument("quantile level must be in [0, 1]");
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::vector<double> data, double q) {
  std::sort(data.begin(), data.end());
  return quantile_sorted(data, q);
}

inline double median(const std::vector<double>& data) {
  return quantile(data, 0.5);
}

inline double interquartile_range(std::vector<double> data) {
  std::sort(data.begin(), data.end());
  return quantile_sorted(data, 0.75) - quantile_sorted(data, 0.25);
}

inline double mean(const std::vector<double>& data) {
  if (data.empty()) throw std::invalid_argument("mean of empty data");
  return std::accumulate(data.begin(), data.end(), 0.0) /
         static_cast<double>(data.size());
}

// Sample standard deviation (n - 1 in the denominator).
inline double sample_std(const std::vector<double>& data) {
  if (data.size() < 2)
    throw std::invalid_argument("standard deviation needs >= 2 points");
  const double mu = mean(data);
  double acc = 0.0;
  for (double x : data) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / (static_cast<double>(data.size()) - 1.0));
}

// Ranks with ties averaged.
inline std::vector<double> average_ranks(const std::vector<double>& data) {
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return data[a] < data[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && data[order[j + 1]] == data[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) +
                     1.0;  // 1-based average rank of the tie block
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& x,
                      const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("correlation needs two equal series, n >= 2");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("correlation undefined for constant series");
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

}  // namespace nss
