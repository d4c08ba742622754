#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ea {

// ---------------------------------------------------------------------------
// BLEU

/// Clipped n-gram counts (n = 1..4) of one lowercased token stream, built
/// once and reused across many comparisons.
class NgramProfile {
 public:
  static constexpr int kMaxOrder = 4;

  explicit NgramProfile(std::string_view text);

  std::size_t length() const { return length_; }
  const std::unordered_map<std::string, int>& counts(int order) const { return counts_[order - 1]; }
  /// Number of n-grams of the given order (length - n + 1, floored at 0).
  std::size_t total(int order) const;

 private:
  std::size_t length_ = 0;
  std::array<std::unordered_map<std::string, int>, kMaxOrder> counts_;
};

/// Document-level BLEU-4 on the 0-100 scale: uniform weights, brevity
/// penalty, and add-one smoothing for orders 2-4 whose clipped match count
/// is zero. An empty candidate scores 0.
double bleu(const NgramProfile& candidate, const NgramProfile& reference);
double bleu(std::string_view candidate, std::string_view reference);

// ---------------------------------------------------------------------------
// Linguistic annotations

struct AnnotatedToken {
  std::string text;
  int head = 0;  // 1-based index of the syntactic head within the sentence, 0 for root
};

/// Inclusive 1-based token span.
struct EntitySpan {
  int start_token = 0;
  int end_token = 0;
  std::string label;
};

struct AnnotatedSentence {
  std::vector<AnnotatedToken> tokens;
  std::vector<EntitySpan> entities;
};

struct AnnotationDocument {
  std::string doc_id;
  std::optional<std::string> pipeline_version;
  std::vector<AnnotatedSentence> sentences;
};

/// Checks head ranges, at least one root, and in-bounds non-overlapping
/// entity spans. Throws ErrorKind::validation naming `where` and the
/// offending sentence/token.
void validate_sentence(const AnnotatedSentence& sentence, const std::string& where);

AnnotationDocument parse_annotations(std::string_view json_text, const std::string& origin = "<memory>");
AnnotationDocument load_annotation_document(const std::filesystem::path& path);
std::vector<AnnotatedSentence> load_annotations(const std::filesystem::path& path);

/// Mean |position - head position| over non-root tokens.
std::optional<double> dependency_distance(const std::vector<AnnotatedSentence>& sentences);

struct EntityDensity {
  double entities_per_100w = 0;
  double persons_per_100w = 0;
};

/// Entity and PERSON counts per hundred tokens. Zero tokens gives (0, 0).
EntityDensity entity_density(const std::vector<AnnotatedSentence>& sentences);

struct StyleMetrics {
  std::string summary_id;
  std::size_t token_count = 0;
  std::size_t sentence_count = 0;
  std::optional<double> mean_dependency_distance;
  std::optional<double> entities_per_100w;
  std::optional<double> persons_per_100w;
  std::optional<double> bleu_vs_reference;
};

}  // namespace ea
