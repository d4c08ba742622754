#include "ea/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "ea/error.hpp"

namespace ea {

namespace {

void check_sample(std::span<const double> s, const char* name) {
  if (s.empty()) throw Error(ErrorKind::validation, std::string("ks_statistic: empty sample ") + name);
  for (double x : s) {
    if (!std::isfinite(x)) throw Error(ErrorKind::validation, std::string("ks_statistic: non-finite value in ") + name);
  }
}

}  // namespace

double ks_statistic(std::span<const double> a_in, std::span<const double> b_in) {
  check_sample(a_in, "a");
  check_sample(b_in, "b");
  std::vector<double> a(a_in.begin(), a_in.end());
  std::vector<double> b(b_in.begin(), b_in.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  // Once one sample is exhausted the gap only shrinks toward 0.
  return d;
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw Error(ErrorKind::validation, "ks_pvalue: sample sizes must be positive");
  d = std::clamp(d, 0.0, 1.0);
  const double en = std::sqrt(static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m));
  const double e = en * d;
  // For e < 0.1 the Kolmogorov survival function is 1 to well beyond double
  // precision, and the alternating series needs ~10^5+ terms to settle.
  if (e < 0.1) return 1.0;
  double sum = 0;
  for (int k = 1; k < 10'000'000; ++k) {
    const double term = std::exp(-2.0 * k * k * e * e);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

std::vector<bool> bh_adjust(std::span<const double> p, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::validation, "bh_adjust: alpha must be in (0, 1)");
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::size_t k = 0;  // number rejected
  for (std::size_t r = m; r >= 1; --r) {
    if (p[order[r - 1]] <= static_cast<double>(r) / static_cast<double>(m) * alpha) {
      k = r;
      break;
    }
  }
  std::vector<bool> out(m, false);
  for (std::size_t r = 0; r < k; ++r) out[order[r]] = true;
  return out;
}

MeanSe mean_se(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorKind::validation, "mean_se: empty input");
  const double n = static_cast<double>(v.size());
  MeanSe r;
  r.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() == 1) return r;
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  return r;
}

ComparisonReport compare_samples(std::string metric, std::string group_a, std::span<const double> a,
                                 std::string group_b, std::span<const double> b) {
  ComparisonReport r;
  r.metric_name = std::move(metric);
  r.group_a = std::move(group_a);
  r.group_b = std::move(group_b);
  r.ks_distance = ks_statistic(a, b);
  r.n_a = a.size();
  r.n_b = b.size();
  r.p_value = ks_pvalue(r.ks_distance, r.n_a, r.n_b);
  return r;
}

void apply_bh(std::vector<ComparisonReport>& reports, double alpha) {
  std::vector<double> p;
  p.reserve(reports.size());
  for (const auto& r : reports) p.push_back(r.p_value);
  const auto decisions = bh_adjust(p, alpha);
  for (std::size_t i = 0; i < reports.size(); ++i) reports[i].significant = decisions[i];
}

namespace {

std::optional<AggregateCell> cell_from_books(const std::string& group, const std::string& metric,
                                             const std::map<std::string, std::vector<double>>& by_book) {
  std::vector<double> book_means;
  for (const auto& [book, vals] : by_book) {
    if (vals.empty()) continue;
    book_means.push_back(std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size()));
  }
  if (book_means.empty()) return std::nullopt;
  const auto ms = mean_se(book_means);
  return AggregateCell{group, metric, ms.mean, ms.se, static_cast<int>(book_means.size())};
}

std::optional<AggregateCell> cell_flat(const std::string& group, const std::string& metric,
                                       const std::map<std::string, std::vector<double>>& by_book) {
  std::vector<double> all;
  for (const auto& [book, vals] : by_book) all.insert(all.end(), vals.begin(), vals.end());
  if (all.empty()) return std::nullopt;
  const auto ms = mean_se(all);
  return AggregateCell{group, metric, ms.mean, ms.se, static_cast<int>(by_book.size())};
}

}  // namespace

AggregateResult aggregate(std::span<const MetricRecord> records, const std::string& metric,
                          const std::vector<std::string>& models, const std::vector<std::string>& prompts,
                          AggregationMode mode) {
  AggregateResult out;
  auto emit = [&](const std::string& group, const std::map<std::string, std::vector<double>>& by_book) {
    auto cell = mode == AggregationMode::flat ? cell_flat(group, metric, by_book) : cell_from_books(group, metric, by_book);
    if (cell) {
      out.cells.push_back(*cell);
    } else {
      out.diagnostics.push_back("no records for group " + group + " on metric " + metric);
    }
  };

  std::map<std::string, std::vector<double>> human;
  for (const auto& r : records) {
    if (r.human) human[r.book].push_back(r.value);
  }
  if (!human.empty()) emit("Human", human);

  for (const auto& model : models) {
    std::map<std::string, std::vector<double>> by_book;
    for (const auto& r : records) {
      if (!r.human && r.model == model) by_book[r.book].push_back(r.value);
    }
    emit(model, by_book);
  }
  for (const auto& prompt : prompts) {
    std::map<std::string, std::vector<double>> by_book;
    for (const auto& r : records) {
      if (!r.human && r.prompt == prompt) by_book[r.book].push_back(r.value);
    }
    emit("Prompt: " + prompt, by_book);
  }
  return out;
}

std::string format_mean_se(double mean, double se, int decimals) {
  // Values that round to zero print as 0, not -0.
  const double half_ulp = 0.5 * std::pow(10.0, -decimals);
  if (std::fabs(mean) < half_ulp) mean = 0.0;
  if (std::fabs(se) < half_ulp) se = 0.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f [\xC2\xB1 %.*f]", decimals, mean, decimals, se);
  return buf;
}

}  // namespace ea
