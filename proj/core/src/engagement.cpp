#include "ea/engagement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ea/error.hpp"

namespace ea {

std::optional<double> chapters_per_sentence(const AlignmentGraph& g) {
  if (g.size() == 0) return std::nullopt;
  const auto deg = g.sentence_degrees();
  const auto engaged = std::count_if(deg.begin() + 1, deg.end(), [](int d) { return d > 0; });
  return static_cast<double>(g.size()) / static_cast<double>(engaged);
}

std::optional<double> sentences_per_chapter(const AlignmentGraph& g) {
  if (g.size() == 0) return std::nullopt;
  const auto deg = g.chapter_degrees();
  const auto engaged = std::count_if(deg.begin() + 1, deg.end(), [](int d) { return d > 0; });
  return static_cast<double>(g.size()) / static_cast<double>(engaged);
}

SkipProportions prop_skipped(const AlignmentGraph& g) {
  SkipProportions p;
  const auto sd = g.sentence_degrees();
  const auto cd = g.chapter_degrees();
  if (g.n_chapters() > 0) {
    p.chapters = static_cast<double>(std::count(cd.begin() + 1, cd.end(), 0)) / g.n_chapters();
  }
  if (g.n_sentences() > 0) {
    p.sentences = static_cast<double>(std::count(sd.begin() + 1, sd.end(), 0)) / g.n_sentences();
  }
  return p;
}

namespace {

// Merge sort counting exchanges (discordant pairs under a sort by x then y).
std::int64_t sort_and_count_swaps(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = sort_and_count_swaps(v, buf, lo, mid) + sort_and_count_swaps(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum of t(t-1)/2 over runs of equal values in a sorted range.
template <typename It, typename Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
  std::int64_t total = 0;
  while (first != last) {
    It run = first;
    std::int64_t t = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++t;
    }
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

}  // namespace

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::validation, "kendall_tau_b: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;

  // Knight's algorithm.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t tx = tied_pairs(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::int64_t txy = tied_pairs(order.begin(), order.end(),
                                      [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(n);
  const std::int64_t swaps = sort_and_count_swaps(ys, buf, 0, n);
  const std::int64_t ty = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  const double denom = std::sqrt(static_cast<double>(n0 - tx)) * std::sqrt(static_cast<double>(n0 - ty));
  if (denom == 0) return std::nullopt;
  // concordant - discordant = n0 - tx - ty + txy - 2 * swaps
  const std::int64_t s = n0 - tx - ty + txy - 2 * swaps;
  return static_cast<double>(s) / denom;
}

std::vector<int> linearity_sequence(const AlignmentGraph& g) {
  std::vector<std::vector<int>> by_chapter(static_cast<std::size_t>(g.n_chapters()) + 1);
  for (const auto& e : g.edges()) by_chapter[e.chapter].push_back(e.sentence);
  std::vector<int> seq;
  seq.reserve(g.size());
  for (auto& ids : by_chapter) {
    std::sort(ids.begin(), ids.end());
    seq.insert(seq.end(), ids.begin(), ids.end());
  }
  return seq;
}

std::optional<double> linearity(const AlignmentGraph& g) {
  if (g.size() < 2) return std::nullopt;
  const auto seq = linearity_sequence(g);
  std::vector<double> x(seq.begin(), seq.end());
  std::vector<double> y = x;
  std::sort(y.begin(), y.end());
  return kendall_tau_b(x, y);
}

std::vector<double> position_samples(const AlignmentGraph& g) {
  std::vector<double> xs;
  xs.reserve(g.size());
  for (const auto& e : g.edges()) xs.push_back(static_cast<double>(e.chapter) / g.n_chapters());
  return xs;
}

std::optional<double> sample_skewness(std::span<const double> xs) {
  if (xs.size() < 3) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double m2 = 0, m3 = 0;
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  // Relative threshold: positions are multiples of 1/n, so genuine variance
  // is far above rounding noise.
  if (m2 <= 1e-24) return std::nullopt;
  return m3 / std::pow(m2, 1.5);
}

std::optional<double> skew(const AlignmentGraph& g) {
  const auto xs = position_samples(g);
  return sample_skewness(xs);
}

std::optional<double> avg_match(const AlignmentGraph& g) {
  if (g.size() == 0) return std::nullopt;
  const auto xs = position_samples(g);
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

EngagementMetrics compute_engagement(const AlignmentGraph& g) {
  EngagementMetrics m;
  m.summary_id = g.summary_id();
  m.chapters_per_sentence = chapters_per_sentence(g);
  m.sentences_per_chapter = sentences_per_chapter(g);
  const auto skipped = prop_skipped(g);
  m.prop_chapters_skipped = skipped.chapters;
  m.prop_sentences_skipped = skipped.sentences;
  m.linearity = linearity(g);
  m.skew = skew(g);
  m.avg_match = avg_match(g);
  return m;
}

int heatmap_bin(int chapter, int n_chapters, int n_bins) {
  const long long num = static_cast<long long>(chapter) * n_bins;
  return static_cast<int>((num + n_chapters - 1) / n_chapters);
}

HeatmapMatrix heatmap(std::span<const AlignmentGraph> graphs, int n_bins) {
  if (n_bins < 1) throw Error(ErrorKind::validation, "heatmap needs at least one bin");
  HeatmapMatrix m;
  m.n_bins = n_bins;
  for (const auto& g : graphs) {
    std::vector<double> row(static_cast<std::size_t>(n_bins), 0.0);
    for (const auto& e : g.edges()) row[heatmap_bin(e.chapter, g.n_chapters(), n_bins) - 1] += 1.0;
    if (g.size() == 0) {
      m.empty_books.push_back(g.novel_id());
    } else {
      for (auto& v : row) v /= static_cast<double>(g.size());
    }
    m.book_ids.push_back(g.novel_id());
    m.rows.push_back(std::move(row));
  }
  return m;
}

std::vector<double> HeatmapMatrix::mean_row() const {
  std::vector<double> mean(static_cast<std::size_t>(n_bins), 0.0);
  std::size_t counted = 0;
  for (const auto& row : rows) {
    double mass = std::accumulate(row.begin(), row.end(), 0.0);
    if (mass == 0) continue;
    for (std::size_t i = 0; i < row.size(); ++i) mean[i] += row[i];
    ++counted;
  }
  if (counted > 0) {
    for (auto& v : mean) v /= static_cast<double>(counted);
  }
  return mean;
}

}  // namespace ea
