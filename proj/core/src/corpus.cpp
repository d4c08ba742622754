#include "ea/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <regex>
#include <unordered_set>

#include "ea/error.hpp"
#include "ea/io.hpp"
#include "ea/text.hpp"

namespace ea {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(AuthorKind kind) { return kind == AuthorKind::human ? "human" : "model"; }

std::string_view to_string(PromptVariant variant) {
  switch (variant) {
    case PromptVariant::text:
      return "Text";
    case PromptVariant::text_inst:
      return "TextInst";
    case PromptVariant::title:
      return "Title";
    case PromptVariant::title_inst:
      return "TitleInst";
  }
  return "";
}

std::optional<AuthorKind> parse_author_kind(std::string_view s) {
  auto lower = to_lower_ascii(s);
  if (lower == "human") return AuthorKind::human;
  if (lower == "model") return AuthorKind::model;
  return std::nullopt;
}

std::optional<PromptVariant> parse_prompt_variant(std::string_view s) {
  auto lower = to_lower_ascii(s);
  if (lower == "text") return PromptVariant::text;
  if (lower == "textinst") return PromptVariant::text_inst;
  if (lower == "title") return PromptVariant::title;
  if (lower == "titleinst") return PromptVariant::title_inst;
  return std::nullopt;
}

bool requires_full_text(PromptVariant v) { return v == PromptVariant::text || v == PromptVariant::text_inst; }
bool requires_guidelines(PromptVariant v) {
  return v == PromptVariant::text_inst || v == PromptVariant::title_inst;
}

std::size_t Novel::token_count() const {
  std::size_t n = 0;
  for (const auto& c : chapters) n += c.token_count;
  return n;
}

std::size_t Summary::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.token_count;
  return n;
}

// ---------------------------------------------------------------------------
// Segmentation

SegmentationRules SegmentationRules::defaults() {
  SegmentationRules r;
  r.heading_patterns = {
      R"(^\s*(CHAPTER|Chapter)\s+([IVXLCDM]+|[0-9]+)\b.*$)",
      R"(^\s*[IVXLCDM]+\.(\s.*)?$)",
      R"(^\s*[A-Z][A-Z0-9 ,.;:'!?\-]*[A-Z][A-Z0-9 ,.;:'!?\-]*$)",
  };
  return r;
}

SegmentationRules load_segmentation_rules(const fs::path& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw Error(ErrorKind::config, path.string() + ": expected a JSON object");
  SegmentationRules r = SegmentationRules::defaults();
  try {
    if (j.contains("heading_patterns")) r.heading_patterns = j.at("heading_patterns").get<std::vector<std::string>>();
    if (j.contains("force_heading_lines")) r.force_heading_lines = j.at("force_heading_lines").get<std::vector<int>>();
    if (j.contains("suppress_heading_lines"))
      r.suppress_heading_lines = j.at("suppress_heading_lines").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return r;
}

std::string Segmentation::reassemble() const {
  std::string out = preamble;
  for (const auto& c : chapters) out += c.text;
  return out;
}

namespace {

struct Line {
  std::size_t begin;
  std::size_t end;  // exclusive, excludes '\n' and a trailing '\r'
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::size_t content_end = end;
    if (content_end > pos && text[content_end - 1] == '\r') --content_end;
    lines.push_back({pos, content_end});
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

void check_unique(const std::vector<int>& v, const char* what) {
  std::unordered_set<int> seen;
  for (int x : v) {
    if (!seen.insert(x).second) {
      throw Error(ErrorKind::config, std::string("duplicate ") + what + " entry for line " + std::to_string(x));
    }
  }
}

}  // namespace

Segmentation segment_chapters(std::string_view raw, const SegmentationRules& rules) {
  {
    std::unordered_set<std::string> seen;
    for (const auto& p : rules.heading_patterns) {
      if (!seen.insert(p).second) throw Error(ErrorKind::config, "duplicate heading pattern: " + p);
    }
  }
  check_unique(rules.force_heading_lines, "force_heading_lines");
  check_unique(rules.suppress_heading_lines, "suppress_heading_lines");
  for (int f : rules.force_heading_lines) {
    if (std::find(rules.suppress_heading_lines.begin(), rules.suppress_heading_lines.end(), f) !=
        rules.suppress_heading_lines.end()) {
      throw Error(ErrorKind::config, "line " + std::to_string(f) + " is both forced and suppressed");
    }
  }

  std::vector<std::regex> patterns;
  for (const auto& p : rules.heading_patterns) {
    try {
      patterns.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw Error(ErrorKind::config, "invalid heading pattern '" + p + "': " + e.what());
    }
  }

  const auto lines = split_lines(raw);
  const int n_lines = static_cast<int>(lines.size());
  for (int f : rules.force_heading_lines) {
    if (f < 1 || f > n_lines) throw Error(ErrorKind::config, "forced heading line out of range: " + std::to_string(f));
  }
  const std::unordered_set<int> forced(rules.force_heading_lines.begin(), rules.force_heading_lines.end());
  const std::unordered_set<int> suppressed(rules.suppress_heading_lines.begin(), rules.suppress_heading_lines.end());

  // Headings separated only by blank lines form one block (e.g. "CHAPTER I"
  // followed by an all-caps title line); a block starts a single chapter.
  Segmentation seg;
  struct Block {
    std::size_t offset;
    std::string heading;
  };
  std::vector<Block> blocks;
  bool prev_was_heading = false;
  for (int i = 0; i < n_lines; ++i) {
    const int line_no = i + 1;
    const std::string_view content = raw.substr(lines[i].begin, lines[i].end - lines[i].begin);
    const std::string trimmed = trim(content);
    if (trimmed.empty()) continue;  // blank lines do not break a heading block

    int matched = -2;
    if (forced.count(line_no)) {
      matched = -1;
    } else if (!suppressed.count(line_no) && content.size() <= 200) {
      const std::string line(content);
      for (std::size_t p = 0; p < patterns.size(); ++p) {
        if (std::regex_match(line, patterns[p])) {
          matched = static_cast<int>(p);
          break;
        }
      }
    }
    if (matched == -2) {
      prev_was_heading = false;
      continue;
    }
    seg.headings.push_back({line_no, lines[i].begin, trimmed, matched});
    if (prev_was_heading && !blocks.empty()) {
      blocks.back().heading += " " + trimmed;
    } else {
      blocks.push_back({lines[i].begin, trimmed});
    }
    prev_was_heading = true;
  }

  if (blocks.empty()) {
    seg.no_headings_warning = true;
    Chapter c;
    c.index = 1;
    c.text = std::string(raw);
    c.token_count = count_tokens(c.text);
    seg.chapters.push_back(std::move(c));
    return seg;
  }

  seg.preamble = std::string(raw.substr(0, blocks.front().offset));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t begin = blocks[b].offset;
    const std::size_t end = b + 1 < blocks.size() ? blocks[b + 1].offset : raw.size();
    Chapter c;
    c.index = static_cast<int>(b) + 1;
    c.heading = blocks[b].heading;
    c.text = std::string(raw.substr(begin, end - begin));
    c.token_count = count_tokens(c.text);
    seg.chapters.push_back(std::move(c));
  }
  return seg;
}

// ---------------------------------------------------------------------------
// Sentences

const std::set<std::string, std::less<>>& sentence_abbreviations() {
  static const std::set<std::string, std::less<>> abbrevs = {
      // honorifics and titles
      "Mr", "Mrs", "Ms", "Messrs", "Mme", "Mmes", "Mlle", "Mlles", "Mdme", "Dr", "Drs", "Prof", "Rev", "Revd",
      "Hon", "Esq", "Jr", "Sr", "St", "Ste", "Mt", "Fr", "Br", "Sen", "Rep", "Gov", "Pres", "Supt", "Insp",
      // military ranks
      "Gen", "Col", "Lt", "Capt", "Cmdr", "Maj", "Sgt", "Cpl", "Pvt", "Adm", "Brig",
      // reference and common abbreviations
      "No", "Nos", "Vol", "Vols", "Ch", "Chap", "pp", "cf", "viz", "vs", "approx", "ca", "Co", "Bros", "Inc",
      "Ltd", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep", "Sept", "Oct", "Nov", "Dec"};
  return abbrevs;
}

bool is_non_terminating(std::string_view word) {
  if (word.empty() || word.back() != '.') return false;
  word.remove_suffix(1);
  // Opening punctuation glued to the word does not change its identity.
  while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'' ||
                           word.front() == '[')) {
    word.remove_prefix(1);
  }
  if (word.empty()) return false;
  if (sentence_abbreviations().count(word)) return true;
  if (word.size() == 1 && word[0] >= 'A' && word[0] <= 'Z') return true;  // initial
  // Dotted acronyms: letter(.letter)+, e.g. "U.S", "e.g", "i.e".
  if (word.size() >= 3) {
    bool dotted = true;
    for (std::size_t i = 0; i < word.size(); ++i) {
      const char c = word[i];
      const bool letter = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
      if ((i % 2 == 0 && !letter) || (i % 2 == 1 && c != '.')) {
        dotted = false;
        break;
      }
    }
    if (dotted) return true;
  }
  return false;
}

namespace {

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

bool starts_sentence(std::string_view rest) {
  if (rest.empty()) return false;
  const auto c = static_cast<unsigned char>(rest[0]);
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '"' || c == '\'' || c == '(' || c == '[') {
    return true;
  }
  // Latin-1 capitals (U+00C0..U+00DE) and curly opening quotes.
  if (c == 0xC3 && rest.size() > 1) {
    const auto c1 = static_cast<unsigned char>(rest[1]);
    return c1 >= 0x80 && c1 <= 0x9E && c1 != 0x97;
  }
  return rest.substr(0, 3) == "\xE2\x80\x9C" || rest.substr(0, 3) == "\xE2\x80\x98";
}

}  // namespace

std::vector<SummarySentence> split_sentences(std::string_view text) {
  const std::string s = normalize_whitespace(text);
  std::vector<SummarySentence> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    if (e <= b) return;
    SummarySentence sent;
    sent.index = static_cast<int>(out.size()) + 1;
    sent.text = s.substr(b, e - b);
    sent.token_count = count_tokens(sent.text);
    out.push_back(std::move(sent));
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c != '.' && c != '!' && c != '?') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < s.size() && (s[j] == '.' || s[j] == '!' || s[j] == '?')) ++j;
    // closing quotes, including U+201D and U+2019
    while (j < s.size()) {
      if (is_closer(s[j])) {
        ++j;
      } else if (s.compare(j, 3, "\xE2\x80\x9D") == 0 || s.compare(j, 3, "\xE2\x80\x99") == 0) {
        j += 3;
      } else {
        break;
      }
    }
    if (j >= s.size() || s[j] != ' ' || !starts_sentence(std::string_view(s).substr(j + 1))) {
      i = j;
      continue;
    }
    if (c == '.' && j == i + 1) {
      const std::size_t word_begin = s.rfind(' ', i);
      const std::size_t wb = word_begin == std::string::npos ? 0 : word_begin + 1;
      if (is_non_terminating(std::string_view(s).substr(wb, i + 1 - wb))) {
        i = j;
        continue;
      }
    }
    emit(start, j);
    start = j + 1;
    i = start;
  }
  emit(start, s.size());
  return out;
}

// ---------------------------------------------------------------------------
// Loading

const Novel* Corpus::find_novel(std::string_view id) const {
  for (const auto& n : novels) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const Summary* Corpus::find_summary(std::string_view id) const {
  for (const auto& s : summaries) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::string chapter_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03d.txt", index);
  return buf;
}

namespace {

std::string require_string(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorKind::validation, file.string() + ": missing or non-string field '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (j.at(key).is_number_integer()) return std::to_string(j.at(key).get<long long>());
  if (!j.at(key).is_string()) throw Error(ErrorKind::validation, file.string() + ": field '" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

// First heading-like line of a chapter file, used as its heading.
std::string first_line_heading(const std::string& text) {
  const auto lines = split_lines(text);
  for (const auto& l : lines) {
    auto t = trim(std::string_view(text).substr(l.begin, l.end - l.begin));
    if (!t.empty()) return t.size() <= 200 ? t : std::string();
  }
  return {};
}

}  // namespace

Novel load_novel(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json_file(meta_path);
  if (!meta.is_object()) throw Error(ErrorKind::validation, meta_path.string() + ":1: expected a JSON object");
  Novel n;
  n.id = meta.contains("id") ? require_string(meta, "id", meta_path) : dir.filename().string();
  n.title = require_string(meta, "title", meta_path);
  n.author = require_string(meta, "author", meta_path);
  n.source_id = optional_string(meta, "source_id", meta_path);

  const fs::path ch_dir = dir / "chapters";
  if (!fs::is_directory(ch_dir)) throw Error(ErrorKind::validation, ch_dir.string() + ": missing chapters directory");
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& e : fs::directory_iterator(ch_dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".txt") continue;
    const std::string stem = e.path().stem().string();
    if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw Error(ErrorKind::validation, e.path().string() + ": chapter files must be named NNN.txt");
    }
    files.emplace_back(std::stoi(stem), e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::validation, ch_dir.string() + ": no chapter files");
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (files[i].first != static_cast<int>(i) + 1) {
      throw Error(ErrorKind::validation,
                  files[i].second.string() + ": chapter numbering must be contiguous from 001");
    }
    Chapter c;
    c.index = files[i].first;
    c.text = read_text_file(files[i].second);
    c.heading = first_line_heading(c.text);
    c.token_count = count_tokens(c.text);
    n.chapters.push_back(std::move(c));
  }
  return n;
}

Summary load_summary(const fs::path& file) {
  const json j = read_json_file(file);
  if (!j.is_object()) throw Error(ErrorKind::validation, file.string() + ":1: expected a JSON object");
  Summary s;
  s.id = j.contains("id") ? require_string(j, "id", file) : file.stem().string();
  s.novel_id = require_string(j, "novel_id", file);
  auto kind = parse_author_kind(require_string(j, "author_kind", file));
  if (!kind) throw Error(ErrorKind::validation, file.string() + ": author_kind must be 'human' or 'model'");
  s.author_kind = *kind;
  s.model_name = optional_string(j, "model_name", file);
  if (auto pv = optional_string(j, "prompt_variant", file)) {
    s.prompt_variant = parse_prompt_variant(*pv);
    if (!s.prompt_variant) throw Error(ErrorKind::validation, file.string() + ": unknown prompt_variant '" + *pv + "'");
  }
  const bool is_model = s.author_kind == AuthorKind::model;
  if (is_model != s.model_name.has_value() || is_model != s.prompt_variant.has_value()) {
    throw Error(ErrorKind::validation,
                file.string() + ": model_name and prompt_variant must be present exactly when author_kind is model");
  }
  s.raw_text = require_string(j, "raw_text", file);
  s.sentences = split_sentences(normalize_punctuation(s.raw_text));
  return s;
}

Corpus load_corpus(const fs::path& root, const std::vector<fs::path>& extra_summary_dirs) {
  Corpus corpus;
  const fs::path novels_dir = root / "novels";
  if (!fs::is_directory(novels_dir)) throw Error(ErrorKind::validation, novels_dir.string() + ": missing novels directory");
  std::vector<fs::path> novel_dirs;
  for (const auto& e : fs::directory_iterator(novels_dir)) {
    if (e.is_directory()) novel_dirs.push_back(e.path());
  }
  std::sort(novel_dirs.begin(), novel_dirs.end());
  for (const auto& d : novel_dirs) corpus.novels.push_back(load_novel(d));

  std::vector<fs::path> summary_dirs{root / "summaries"};
  summary_dirs.insert(summary_dirs.end(), extra_summary_dirs.begin(), extra_summary_dirs.end());
  std::vector<fs::path> files;
  for (const auto& d : summary_dirs) {
    if (!fs::is_directory(d)) continue;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename() != b.filename() ? a.filename() < b.filename() : a < b;
  });
  std::unordered_set<std::string> ids;
  for (const auto& f : files) {
    Summary s = load_summary(f);
    if (!corpus.find_novel(s.novel_id)) {
      throw Error(ErrorKind::validation, f.string() + ": unknown novel_id '" + s.novel_id + "'");
    }
    if (!ids.insert(s.id).second) throw Error(ErrorKind::validation, f.string() + ": duplicate summary id '" + s.id + "'");
    corpus.summaries.push_back(std::move(s));
  }
  return corpus;
}

std::vector<fs::path> write_chapters(const fs::path& novel_dir, const Segmentation& seg) {
  std::vector<fs::path> written;
  const fs::path ch_dir = novel_dir / "chapters";
  if (fs::exists(ch_dir)) {
    for (const auto& e : fs::directory_iterator(ch_dir)) {
      if (e.path().extension() == ".txt") fs::remove(e.path());
    }
  }
  for (const auto& c : seg.chapters) {
    auto p = ch_dir / chapter_file_name(c.index);
    write_text_file(p, c.text);
    written.push_back(p);
  }
  const fs::path pre = novel_dir / "preamble.txt";
  if (!seg.preamble.empty()) {
    write_text_file(pre, seg.preamble);
    written.push_back(pre);
  } else if (fs::exists(pre)) {
    fs::remove(pre);
  }
  return written;
}

}  // namespace ea
