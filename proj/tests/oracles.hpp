#pragma once

// Slow, obviously-correct reference implementations used to check the
// library's fast paths.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace ea::oracle {

/// Tie-corrected tau-b by visiting every pair.
inline double tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double signed_sum = 0, tied_x = 0, tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0) ++tied_x;
      if (dy == 0) ++tied_y;
      signed_sum += ((dx > 0) - (dx < 0)) * ((dy > 0) - (dy < 0));
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return signed_sum / std::sqrt((pairs - tied_x) * (pairs - tied_y));
}

inline double ecdf(const std::vector<double>& s, double x) {
  return static_cast<double>(std::count_if(s.begin(), s.end(), [x](double v) { return v <= x; })) /
         static_cast<double>(s.size());
}

/// sup |F_a - F_b| evaluated at every sample point of either sample.
inline double ks(const std::vector<double>& a, const std::vector<double>& b) {
  double best = 0;
  for (const auto* s : {&a, &b}) {
    for (double x : *s) best = std::max(best, std::abs(ecdf(a, x) - ecdf(b, x)));
  }
  return best;
}

/// Partial sum of the Kolmogorov series with a fixed number of terms.
inline double ks_series(double d, double n, double m, int terms) {
  const double e = std::sqrt(n * m / (n + m)) * d;
  long double sum = 0;
  for (int k = 1; k <= terms; ++k) {
    const long double term = std::exp(-2.0L * k * k * static_cast<long double>(e) * e);
    sum += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(static_cast<double>(2 * sum), 0.0, 1.0);
}

/// Benjamini-Hochberg by scanning every k for the largest admissible one.
inline std::vector<bool> bh(const std::vector<double>& p, double alpha) {
  const std::size_t m = p.size();
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  double threshold = -1;
  for (std::size_t k = 1; k <= m; ++k) {
    if (sorted[k - 1] <= static_cast<double>(k) / static_cast<double>(m) * alpha) threshold = sorted[k - 1];
  }
  std::vector<bool> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = threshold >= 0 && p[i] <= threshold;
  return out;
}

}  // namespace ea::oracle
