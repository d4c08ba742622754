#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ea {

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|, by sorted merge.
/// Throws ErrorKind::validation for empty or non-finite samples.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Asymptotic two-sample p-value, clamped to [0, 1].
double ks_pvalue(double d, std::size_t n, std::size_t m);

/// Benjamini-Hochberg step-up decisions, in input order.
std::vector<bool> bh_adjust(std::span<const double> pvalues, double alpha);

struct MeanSe {
  double mean = 0;
  double se = 0;  // sample sd / sqrt(n); 0 for n = 1
};
MeanSe mean_se(std::span<const double> values);

struct ComparisonReport {
  std::string metric_name;
  std::string group_a;
  std::string group_b;
  double ks_distance = 0;
  double p_value = 1;
  bool significant = false;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

/// KS distance and p-value; `significant` is left false until BH runs.
ComparisonReport compare_samples(std::string metric, std::string group_a, std::span<const double> a,
                                 std::string group_b, std::span<const double> b);

/// Sets `significant` on every report via one BH family at `alpha`.
void apply_bh(std::vector<ComparisonReport>& reports, double alpha);

/// One metric value for one summary. Human rows leave model/prompt empty.
struct MetricRecord {
  std::string book;
  bool human = false;
  std::string model;
  std::string prompt;
  double value = 0;
};

struct AggregateCell {
  std::string group;  // "Human", a model name, or "Prompt: <variant>"
  std::string metric_name;
  double mean = 0;
  double se = 0;
  int n_books = 0;
};

enum class AggregationMode {
  within_book_first,  // average the other factor inside each book, then across books
  flat,               // every (book, model, prompt) value counts once
};

struct AggregateResult {
  std::vector<AggregateCell> cells;  // human, then models, then prompts
  std::vector<std::string> diagnostics;
};

/// Table layout: a human row across books, one row per model (prompts
/// averaged within each book), one row per prompt (models averaged within
/// each book). `models` / `prompts` fix the row order; groups with no
/// records are omitted with a diagnostic.
AggregateResult aggregate(std::span<const MetricRecord> records, const std::string& metric,
                          const std::vector<std::string>& models, const std::vector<std::string>& prompts,
                          AggregationMode mode = AggregationMode::within_book_first);

/// "mean [± se]" with the given number of decimals.
std::string format_mean_se(double mean, double se, int decimals);

}  // namespace ea
