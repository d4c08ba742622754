#pragma once

#include <compare>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ea {

enum class AlignMethod { llm, tfidf, embedding, gold };

std::string_view to_string(AlignMethod method);
std::optional<AlignMethod> parse_align_method(std::string_view s);

/// One (summary sentence, chapter) pair, both 1-based.
struct Edge {
  int sentence = 0;
  int chapter = 0;
  auto operator<=>(const Edge&) const = default;
};

/// Per-chapter record of an LLM alignment run.
struct ChapterDiagnostic {
  int chapter = 0;
  std::vector<int> old_ids;  // ascending; what the prompt carried
  int parts = 1;             // >1 when the chapter was split to fit the context budget
  int attempts = 0;          // model calls made, summed over parts
  bool skipped = false;      // no usable response after the retry budget
  std::string message;
};

/// Bipartite sentence-to-chapter edge set for one summary/novel pair.
class AlignmentGraph {
 public:
  AlignmentGraph() = default;
  AlignmentGraph(std::string summary_id, std::string novel_id, int n_sentences, int n_chapters, AlignMethod method);

  /// Throws ErrorKind::validation when the edge is out of bounds.
  void add_edge(int sentence, int chapter);
  bool has_edge(int sentence, int chapter) const { return edges_.count({sentence, chapter}) > 0; }

  const std::string& summary_id() const { return summary_id_; }
  const std::string& novel_id() const { return novel_id_; }
  int n_sentences() const { return n_sentences_; }
  int n_chapters() const { return n_chapters_; }
  AlignMethod method() const { return method_; }
  const std::set<Edge>& edges() const { return edges_; }
  std::size_t size() const { return edges_.size(); }

  /// Index 0 unused; degree of sentence s at [s].
  std::vector<int> sentence_degrees() const;
  std::vector<int> chapter_degrees() const;

  std::vector<ChapterDiagnostic> diagnostics;

 private:
  std::string summary_id_;
  std::string novel_id_;
  int n_sentences_ = 0;
  int n_chapters_ = 0;
  AlignMethod method_ = AlignMethod::llm;
  std::set<Edge> edges_;
};

/// Human annotation of one summary/novel pair.
struct GoldAlignment {
  std::string novel_id;
  std::string summary_id;
  std::string annotator;
  int n_sentences = 0;
  int n_chapters = 0;
  std::set<Edge> edges;
};

/// JSON with edges sorted lexicographically; the same layout serves both
/// predicted graphs and gold files (method "gold" plus "annotator").
std::string graph_to_json(const AlignmentGraph& graph);
AlignmentGraph graph_from_json(std::string_view text, const std::string& origin = "<memory>");
AlignmentGraph load_graph(const std::filesystem::path& path);
void save_graph(const std::filesystem::path& path, const AlignmentGraph& graph);

std::string gold_to_json(const GoldAlignment& gold);
GoldAlignment load_gold(const std::filesystem::path& path);

AlignmentGraph as_graph(const GoldAlignment& gold);

}  // namespace ea
