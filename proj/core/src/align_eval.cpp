#include "ea/align_eval.hpp"

#include <algorithm>
#include <map>

#include "ea/error.hpp"

namespace ea {

namespace {

void require_same_pair(const std::string& summary_a, const std::string& novel_a, const std::string& summary_b,
                       const std::string& novel_b) {
  if (summary_a != summary_b || novel_a != novel_b) {
    throw Error(ErrorKind::validation, "mismatched alignment pair: (" + summary_a + ", " + novel_a + ") vs (" +
                                           summary_b + ", " + novel_b + ")");
  }
}

}  // namespace

MatchCounts match_counts(const AlignmentGraph& pred, const GoldAlignment& gold) {
  require_same_pair(pred.summary_id(), pred.novel_id(), gold.summary_id, gold.novel_id);
  MatchCounts c;
  c.predicted = pred.edges().size();
  c.gold = gold.edges.size();
  for (const auto& e : pred.edges()) {
    if (gold.edges.count(e)) ++c.true_positive;
  }
  return c;
}

Prf prf_from_counts(const MatchCounts& c) {
  Prf r;
  r.precision = c.predicted == 0 ? 0.0 : 100.0 * static_cast<double>(c.true_positive) / static_cast<double>(c.predicted);
  r.recall = c.gold == 0 ? 0.0 : 100.0 * static_cast<double>(c.true_positive) / static_cast<double>(c.gold);
  r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Prf prf1(const AlignmentGraph& pred, const GoldAlignment& gold) { return prf_from_counts(match_counts(pred, gold)); }

Prf pooled_prf1(const std::vector<MatchCounts>& per_pair) {
  MatchCounts total;
  for (const auto& c : per_pair) total += c;
  return prf_from_counts(total);
}

Prf macro_prf1(const std::vector<MatchCounts>& per_pair) {
  Prf out;
  if (per_pair.empty()) return out;
  for (const auto& c : per_pair) {
    const Prf p = prf_from_counts(c);
    out.precision += p.precision;
    out.recall += p.recall;
    out.f1 += p.f1;
  }
  const double n = static_cast<double>(per_pair.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  return out;
}

KappaResult cohen_kappa(const GoldAlignment& a, const GoldAlignment& b) {
  require_same_pair(a.summary_id, a.novel_id, b.summary_id, b.novel_id);
  if (a.n_sentences != b.n_sentences || a.n_chapters != b.n_chapters) {
    throw Error(ErrorKind::validation, "annotations of " + a.summary_id + " have different index bounds");
  }
  const double cells = static_cast<double>(a.n_sentences) * static_cast<double>(a.n_chapters);
  if (cells == 0) throw Error(ErrorKind::validation, "empty annotation grid for " + a.summary_id);

  std::size_t both = 0;
  for (const auto& e : a.edges) {
    if (b.edges.count(e)) ++both;
  }
  const double ya = static_cast<double>(a.edges.size());
  const double yb = static_cast<double>(b.edges.size());
  const double disagree = ya + yb - 2.0 * static_cast<double>(both);
  const double p_o = (cells - disagree) / cells;
  const double pa = ya / cells;
  const double pb = yb / cells;
  const double p_e = pa * pb + (1 - pa) * (1 - pb);

  KappaResult r;
  if (p_e >= 1.0) {
    r.degenerate = true;
    r.kappa = disagree == 0 ? 1.0 : 0.0;
    return r;
  }
  r.kappa = disagree == 0 ? 1.0 : (p_o - p_e) / (1 - p_e);
  return r;
}

std::vector<Edge> disagreements(const GoldAlignment& a, const GoldAlignment& b) {
  std::vector<Edge> out;
  std::set_symmetric_difference(a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end(),
                                std::back_inserter(out));
  return out;
}

GoldAlignment adjudicate(const GoldAlignment& a, const GoldAlignment& b, const std::vector<Resolution>& resolutions) {
  require_same_pair(a.summary_id, a.novel_id, b.summary_id, b.novel_id);
  if (a.n_sentences != b.n_sentences || a.n_chapters != b.n_chapters) {
    throw Error(ErrorKind::validation, "annotations of " + a.summary_id + " have different index bounds");
  }
  const auto open = disagreements(a, b);
  const std::set<Edge> open_set(open.begin(), open.end());
  std::map<Edge, bool> decided;
  for (const auto& r : resolutions) {
    if (!open_set.count(r.cell)) {
      throw Error(ErrorKind::validation, "resolution for cell (" + std::to_string(r.cell.sentence) + ", " +
                                             std::to_string(r.cell.chapter) + ") which is not in dispute");
    }
    if (!decided.emplace(r.cell, r.label).second) {
      throw Error(ErrorKind::validation, "duplicate resolution for cell (" + std::to_string(r.cell.sentence) + ", " +
                                             std::to_string(r.cell.chapter) + ")");
    }
  }
  for (const auto& e : open) {
    if (!decided.count(e)) {
      throw Error(ErrorKind::validation, "unresolved disagreement at cell (" + std::to_string(e.sentence) + ", " +
                                             std::to_string(e.chapter) + ")");
    }
  }
  GoldAlignment out;
  out.novel_id = a.novel_id;
  out.summary_id = a.summary_id;
  out.annotator = "adjudicated";
  out.n_sentences = a.n_sentences;
  out.n_chapters = a.n_chapters;
  std::set_intersection(a.edges.begin(), a.edges.end(), b.edges.begin(), b.edges.end(),
                        std::inserter(out.edges, out.edges.end()));
  for (const auto& [cell, label] : decided) {
    if (label) out.edges.insert(cell);
  }
  return out;
}

}  // namespace ea
