#pragma once

#include <vector>

#include "ea/graph.hpp"

namespace ea {

/// Scores on the 0-100 scale.
struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct MatchCounts {
  std::size_t true_positive = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;

  MatchCounts& operator+=(const MatchCounts& o) {
    true_positive += o.true_positive;
    predicted += o.predicted;
    gold += o.gold;
    return *this;
  }
};

/// Throws ErrorKind::validation when the pair refers to different
/// summaries or novels.
MatchCounts match_counts(const AlignmentGraph& pred, const GoldAlignment& gold);

/// Empty prediction has precision 0; f1 is 0 when precision + recall is 0.
Prf prf_from_counts(const MatchCounts& counts);
Prf prf1(const AlignmentGraph& pred, const GoldAlignment& gold);

/// Micro average over pooled (sentence, chapter) pairs.
Prf pooled_prf1(const std::vector<MatchCounts>& per_pair);
/// Unweighted mean of per-pair scores.
Prf macro_prf1(const std::vector<MatchCounts>& per_pair);

struct KappaResult {
  double kappa = 0;
  bool degenerate = false;  // chance agreement was 1
};

/// Cohen's kappa over the |S| x n cell grid, each cell a YES/NO label.
/// When p_e = 1 the result is 1 for identical annotations and 0 otherwise,
/// with `degenerate` set.
KappaResult cohen_kappa(const GoldAlignment& a, const GoldAlignment& b);

struct Resolution {
  Edge cell;
  bool label = false;  // true: the edge belongs in the merged set
};

/// Cells where exactly one annotator drew an edge.
std::vector<Edge> disagreements(const GoldAlignment& a, const GoldAlignment& b);

/// Agreed cells pass through; each disagreeing cell takes its resolution.
/// Resolutions must cover the disagreements exactly. Result annotator is
/// "adjudicated".
GoldAlignment adjudicate(const GoldAlignment& a, const GoldAlignment& b, const std::vector<Resolution>& resolutions);

}  // namespace ea
