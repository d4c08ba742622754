#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ea/corpus.hpp"
#include "ea/graph.hpp"
#include "ea/llm_gateway.hpp"

namespace ea {

struct AlignerConfig {
  std::string model;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  int parse_retries = 3;
  /// Word-token budget for one alignment prompt; 0 disables chapter splitting.
  int context_budget_tokens = 0;
};

/// Keys answered YES in the first JSON object of a model reply. Code fences
/// and surrounding prose are ignored. Throws ErrorKind::parse when no object
/// is found, a key is not an integer in 1..n_sentences, or a value is not
/// YES/NO (any case).
std::set<int> parse_alignment_response(std::string_view text, int n_sentences);

/// Splits text at blank-line paragraph boundaries into at most `parts`
/// pieces of near-equal token count. Concatenating the pieces gives back the
/// input.
std::vector<std::string> split_at_paragraphs(std::string_view text, int parts);

/// Chapter-by-chapter LLM alignment. Chapter i's prompt carries every
/// sentence id already matched to chapters 1..i-1, so the loop is strictly
/// sequential. Chapters whose replies stay unparseable after the retry
/// budget contribute no edges and are marked skipped in the diagnostics.
AlignmentGraph align_llm(const Summary& summary, const Novel& novel, const Transport& transport,
                         const AlignerConfig& config);

/// TF-IDF over the novel's chapters (tf = raw count, idf = ln(n/(1+df)) + 1).
class TfidfModel {
 public:
  explicit TfidfModel(const Novel& novel);

  using SparseVector = std::vector<std::pair<int, double>>;  // sorted by term id

  /// Sentence vector with chapter-derived idf; out-of-vocabulary terms dropped.
  SparseVector vectorize(std::string_view text) const;
  /// Cosine against every chapter, index 0 for chapter 1.
  std::vector<double> chapter_similarities(const SparseVector& v) const;

  int n_chapters() const { return static_cast<int>(chapter_vectors_.size()); }
  double idf(std::string_view term) const;

 private:
  std::unordered_map<std::string, int> vocab_;
  std::vector<double> idf_;
  std::vector<SparseVector> chapter_vectors_;
  std::vector<double> chapter_norms_;
};

/// One edge per sentence to the most similar chapter (ties to the lower
/// index); sentences without in-vocabulary tokens get no edge.
AlignmentGraph align_tfidf(const Summary& summary, const Novel& novel);

struct EmbeddingTable {
  int dimension = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  /// Throws ErrorKind::validation when the unit has no vector.
  const std::vector<double>& at(const std::string& id) const;
};

/// `{dimension, vectors: {id: [...]}}`; rejects wrong lengths and NaNs.
EmbeddingTable load_embedding_table(const std::filesystem::path& path);

std::string sentence_unit_id(std::string_view summary_id, int sentence_index);
std::string chapter_unit_id(std::string_view novel_id, int chapter_index);

AlignmentGraph align_embedding(const Summary& summary, const Novel& novel, const EmbeddingTable& table);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ea
