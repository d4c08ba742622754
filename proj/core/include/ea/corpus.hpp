#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ea {

enum class AuthorKind { human, model };

/// The four generation prompts: {full text, title only} x {with, without} guidelines.
enum class PromptVariant { text, text_inst, title, title_inst };

std::string_view to_string(AuthorKind kind);
std::string_view to_string(PromptVariant variant);
std::optional<AuthorKind> parse_author_kind(std::string_view s);
/// Accepts "Text", "TextInst", "Title", "TitleInst" (case-insensitive).
std::optional<PromptVariant> parse_prompt_variant(std::string_view s);
bool requires_full_text(PromptVariant variant);
bool requires_guidelines(PromptVariant variant);

struct Chapter {
  int index = 0;        // 1-based, contiguous in reading order
  std::string heading;  // heading line without surrounding whitespace; may be empty
  std::string text;     // raw chapter bytes, heading line included
  std::size_t token_count = 0;
};

struct Novel {
  std::string id;
  std::string title;
  std::string author;
  std::vector<Chapter> chapters;
  std::optional<std::string> source_id;

  std::size_t token_count() const;
  int n_chapters() const { return static_cast<int>(chapters.size()); }
};

struct SummarySentence {
  int index = 0;
  std::string text;
  std::size_t token_count = 0;
};

struct Summary {
  std::string id;
  std::string novel_id;
  AuthorKind author_kind = AuthorKind::human;
  std::optional<std::string> model_name;
  std::optional<PromptVariant> prompt_variant;
  std::string raw_text;
  std::vector<SummarySentence> sentences;

  std::size_t token_count() const;
  int n_sentences() const { return static_cast<int>(sentences.size()); }
};

// ---------------------------------------------------------------------------
// Chapter segmentation

/// Heading rules for one novel. Patterns are ECMAScript regexes matched
/// against whole lines (trailing '\r' removed); the first matching pattern
/// wins. Line overrides are 1-based line numbers and record manual
/// corrections to the automatic result.
struct SegmentationRules {
  std::vector<std::string> heading_patterns;
  std::vector<int> force_heading_lines;
  std::vector<int> suppress_heading_lines;

  static SegmentationRules defaults();
};

/// Reads `segmentation.json`. Absent keys fall back to the defaults.
SegmentationRules load_segmentation_rules(const std::filesystem::path& path);

struct HeadingMatch {
  int line = 0;             // 1-based
  std::size_t offset = 0;   // byte offset of the line start
  std::string text;         // trimmed heading line
  int pattern = -1;         // index into heading_patterns, -1 when forced
};

struct Segmentation {
  std::vector<Chapter> chapters;
  std::string preamble;  // bytes before the first heading
  std::vector<HeadingMatch> headings;
  bool no_headings_warning = false;

  /// preamble + every chapter's text; equals the segmented input.
  std::string reassemble() const;
};

/// Splits cleaned novel text at heading lines. Throws ErrorKind::config for
/// invalid regexes, duplicate patterns, or conflicting line overrides.
Segmentation segment_chapters(std::string_view raw_text, const SegmentationRules& rules);

// ---------------------------------------------------------------------------
// Sentences

/// Abbreviations (without the trailing period) that never end a sentence.
const std::set<std::string, std::less<>>& sentence_abbreviations();

/// True when a word ending in '.' must not terminate a sentence: listed
/// abbreviations, single-letter initials, and dotted acronyms like "U.S.".
bool is_non_terminating(std::string_view word_with_period);

/// Rule-based splitter over whitespace-normalized text. A sentence ends at
/// '.', '!' or '?' (plus any closing quotes/brackets) followed by a space and
/// an uppercase letter, digit, or opening quote.
std::vector<SummarySentence> split_sentences(std::string_view text);

// ---------------------------------------------------------------------------
// On-disk corpus

struct Corpus {
  std::vector<Novel> novels;
  std::vector<Summary> summaries;

  const Novel* find_novel(std::string_view id) const;
  const Summary* find_summary(std::string_view id) const;
};

Novel load_novel(const std::filesystem::path& novel_dir);
Summary load_summary(const std::filesystem::path& summary_file);

/// Loads `<root>/novels/*` and `<root>/summaries/*.json`, plus summaries from
/// any extra directories. Every summary must reference a loaded novel.
Corpus load_corpus(const std::filesystem::path& root,
                   const std::vector<std::filesystem::path>& extra_summary_dirs = {});

/// Writes `chapters/NNN.txt` for each chapter; returns the written paths.
std::vector<std::filesystem::path> write_chapters(const std::filesystem::path& novel_dir,
                                                  const Segmentation& segmentation);

std::string chapter_file_name(int index);

}  // namespace ea
