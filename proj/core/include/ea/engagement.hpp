#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ea/graph.hpp"

namespace ea {

/// Per-summary engagement record. Metrics undefined for a graph (too few
/// edges, zero variance) are empty.
struct EngagementMetrics {
  std::string summary_id;
  std::optional<double> chapters_per_sentence;
  std::optional<double> sentences_per_chapter;
  double prop_chapters_skipped = 0;
  double prop_sentences_skipped = 0;
  std::optional<double> linearity;
  std::optional<double> skew;
  std::optional<double> avg_match;
};

/// Mean degree over sentences with at least one edge.
std::optional<double> chapters_per_sentence(const AlignmentGraph& g);
/// Mean degree over chapters with at least one edge.
std::optional<double> sentences_per_chapter(const AlignmentGraph& g);

struct SkipProportions {
  double chapters = 0;
  double sentences = 0;
};
SkipProportions prop_skipped(const AlignmentGraph& g);

/// Kendall's tau-b in O(n log n). Empty when n < 2 or either side is constant.
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

/// Matched sentence ids, sorted within each chapter, chapters in order.
std::vector<int> linearity_sequence(const AlignmentGraph& g);

/// tau-b between the chapter-ordered sequence and its sorted copy.
std::optional<double> linearity(const AlignmentGraph& g);

/// Normalized chapter position c/n, one sample per edge.
std::vector<double> position_samples(const AlignmentGraph& g);

/// Population moment skewness m3 / m2^1.5. Empty for < 3 samples or zero variance.
std::optional<double> sample_skewness(std::span<const double> xs);
std::optional<double> skew(const AlignmentGraph& g);

std::optional<double> avg_match(const AlignmentGraph& g);

EngagementMetrics compute_engagement(const AlignmentGraph& g);

struct HeatmapMatrix {
  std::vector<std::string> book_ids;
  int n_bins = 1;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> empty_books;  // rows left all-zero

  /// Column means over the rows that carry mass.
  std::vector<double> mean_row() const;
};

/// 1-based bin of chapter i of n: ceil(i * n_bins / n).
int heatmap_bin(int chapter, int n_chapters, int n_bins);

/// One row per graph: share of its edges falling in each equal-width
/// position bin over (0, 1].
HeatmapMatrix heatmap(std::span<const AlignmentGraph> graphs, int n_bins);

}  // namespace ea
