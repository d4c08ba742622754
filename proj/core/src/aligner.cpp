#include "ea/aligner.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ea/error.hpp"
#include "ea/io.hpp"
#include "ea/prompts.hpp"
#include "ea/text.hpp"

namespace ea {

using nlohmann::json;

namespace {

// End of the balanced JSON object starting at `open`, or npos.
std::size_t object_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

[[noreturn]] void parse_fail(const std::string& why) { throw Error(ErrorKind::parse, "alignment response: " + why); }

}  // namespace

std::set<int> parse_alignment_response(std::string_view text, int n_sentences) {
  if (n_sentences < 1) throw Error(ErrorKind::validation, "n_sentences must be >= 1");
  json obj;
  bool found = false;
  for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    const auto end = object_end(text, open);
    if (end == std::string_view::npos) break;
    try {
      obj = json::parse(text.substr(open, end - open));
      if (obj.is_object()) {
        found = true;
        break;
      }
    } catch (const json::parse_error&) {
    }
  }
  if (!found) parse_fail("no JSON object found");

  std::set<int> yes;
  for (const auto& [key, value] : obj.items()) {
    const std::string k = trim(key);
    if (k.empty() || !std::all_of(k.begin(), k.end(), [](char c) { return c >= '0' && c <= '9'; }) || k.size() > 9) {
      parse_fail("key '" + key + "' is not a sentence index");
    }
    const int idx = std::stoi(k);
    if (idx < 1 || idx > n_sentences) {
      parse_fail("key " + k + " outside 1.." + std::to_string(n_sentences));
    }
    if (!value.is_string()) parse_fail("value for key " + k + " is not a string");
    const std::string v = to_lower_ascii(trim(value.get<std::string>()));
    if (v == "yes") {
      yes.insert(idx);
    } else if (v != "no") {
      parse_fail("value for key " + k + " is neither YES nor NO");
    }
  }
  return yes;
}

std::vector<std::string> split_at_paragraphs(std::string_view text, int parts) {
  // Paragraph pieces keep their trailing blank lines so concatenation is lossless.
  std::vector<std::string_view> paras;
  std::size_t begin = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) break;
    std::size_t next = nl + 1;
    std::size_t probe = next;
    while (probe < text.size() && (text[probe] == ' ' || text[probe] == '\t' || text[probe] == '\r')) ++probe;
    if (probe < text.size() && text[probe] == '\n') {
      while (probe < text.size() && (text[probe] == '\n' || text[probe] == ' ' || text[probe] == '\t' ||
                                     text[probe] == '\r')) {
        ++probe;
      }
      paras.push_back(text.substr(begin, probe - begin));
      begin = probe;
      pos = probe;
    } else {
      pos = next;
    }
  }
  if (begin < text.size()) paras.push_back(text.substr(begin));
  if (paras.empty()) return {std::string(text)};

  parts = std::clamp(parts, 1, static_cast<int>(paras.size()));
  std::vector<std::size_t> tokens;
  std::size_t total = 0;
  for (auto p : paras) {
    tokens.push_back(count_tokens(p));
    total += tokens.back();
  }
  std::vector<std::string> out;
  std::string current;
  std::size_t cumulative = 0;
  int made = 0;
  for (std::size_t i = 0; i < paras.size(); ++i) {
    current += paras[i];
    cumulative += tokens[i];
    const std::size_t remaining_paras = paras.size() - i - 1;
    const int remaining_parts = parts - made - 1;
    const bool reached = cumulative * static_cast<std::size_t>(parts) >= total * static_cast<std::size_t>(made + 1);
    if (remaining_parts > 0 && (reached || remaining_paras == static_cast<std::size_t>(remaining_parts))) {
      out.push_back(std::move(current));
      current.clear();
      ++made;
    }
  }
  if (!current.empty() || out.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

std::vector<std::string> chapter_parts(const Summary& summary, const Chapter& chapter, const std::set<int>& old_ids,
                                       int budget) {
  if (budget <= 0) return {chapter.text};
  const auto full = count_tokens(render_alignment_prompt(summary, chapter, old_ids));
  if (full <= static_cast<std::size_t>(budget)) return {chapter.text};
  const auto overhead = count_tokens(render_alignment_prompt(summary, std::string_view{}, old_ids));
  if (overhead >= static_cast<std::size_t>(budget)) {
    throw Error(ErrorKind::validation, "summary " + summary.id + " alone exceeds the context budget");
  }
  const std::size_t avail = static_cast<std::size_t>(budget) - overhead;
  int k = static_cast<int>((chapter.token_count + avail - 1) / avail);
  std::vector<std::string> parts;
  for (;; ++k) {
    parts = split_at_paragraphs(chapter.text, k);
    const bool fits = std::all_of(parts.begin(), parts.end(), [&](const std::string& p) { return count_tokens(p) <= avail; });
    // Stop once every part fits or paragraphs cannot be split further.
    if (fits || static_cast<int>(parts.size()) < k) break;
  }
  return parts;
}

}  // namespace

AlignmentGraph align_llm(const Summary& summary, const Novel& novel, const Transport& transport,
                         const AlignerConfig& config) {
  if (summary.novel_id != novel.id) {
    throw Error(ErrorKind::validation, "summary " + summary.id + " belongs to " + summary.novel_id + ", not " + novel.id);
  }
  AlignmentGraph graph(summary.id, novel.id, summary.n_sentences(), novel.n_chapters(), AlignMethod::llm);
  if (summary.sentences.empty()) return graph;

  std::set<int> matched_so_far;
  for (const auto& chapter : novel.chapters) {
    ChapterDiagnostic diag;
    diag.chapter = chapter.index;
    diag.old_ids.assign(matched_so_far.begin(), matched_so_far.end());

    const auto parts = chapter_parts(summary, chapter, matched_so_far, config.context_budget_tokens);
    diag.parts = static_cast<int>(parts.size());
    std::set<int> chapter_yes;
    int failed_parts = 0;
    for (const auto& part : parts) {
      ChatRequest req;
      req.model = config.model;
      req.prompt = render_alignment_prompt(summary, std::string_view(part), matched_so_far);
      req.temperature = config.temperature;
      req.max_output_tokens = config.max_output_tokens;
      bool ok = false;
      std::string last_error;
      for (int attempt = 0; attempt <= config.parse_retries && !ok; ++attempt) {
        req.attempt = attempt;
        ++diag.attempts;
        const ChatResponse resp = transport.complete(req);
        try {
          auto yes = parse_alignment_response(resp.text, summary.n_sentences());
          chapter_yes.insert(yes.begin(), yes.end());
          ok = true;
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::parse) throw;
          last_error = e.what();
        }
      }
      if (!ok) {
        ++failed_parts;
        if (!diag.message.empty()) diag.message += "; ";
        diag.message += last_error;
      }
    }
    if (failed_parts == static_cast<int>(parts.size())) {
      diag.skipped = true;
      chapter_yes.clear();
    }
    for (int s : chapter_yes) graph.add_edge(s, chapter.index);
    matched_so_far.insert(chapter_yes.begin(), chapter_yes.end());
    graph.diagnostics.push_back(std::move(diag));
  }
  return graph;
}

// ---------------------------------------------------------------------------
// TF-IDF

TfidfModel::TfidfModel(const Novel& novel) {
  const int n = novel.n_chapters();
  if (n < 1) throw Error(ErrorKind::validation, "novel " + novel.id + " has no chapters");
  std::vector<std::unordered_map<int, int>> counts(static_cast<std::size_t>(n));
  std::vector<int> df;
  for (int c = 0; c < n; ++c) {
    for (auto& tok : lowercase_tokens(novel.chapters[c].text)) {
      auto [it, inserted] = vocab_.try_emplace(std::move(tok), static_cast<int>(vocab_.size()));
      if (inserted) df.push_back(0);
      if (counts[c][it->second]++ == 0) ++df[it->second];
    }
  }
  idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    idf_[t] = std::log(static_cast<double>(n) / (1.0 + df[t])) + 1.0;
  }
  for (int c = 0; c < n; ++c) {
    SparseVector v(counts[c].begin(), counts[c].end());
    std::sort(v.begin(), v.end());
    double norm2 = 0;
    for (auto& [term, w] : v) {
      w *= idf_[term];
      norm2 += w * w;
    }
    chapter_vectors_.push_back(std::move(v));
    chapter_norms_.push_back(std::sqrt(norm2));
  }
}

double TfidfModel::idf(std::string_view term) const {
  auto it = vocab_.find(std::string(term));
  return it == vocab_.end() ? 0.0 : idf_[it->second];
}

TfidfModel::SparseVector TfidfModel::vectorize(std::string_view text) const {
  std::unordered_map<int, int> counts;
  for (const auto& tok : lowercase_tokens(text)) {
    auto it = vocab_.find(tok);
    if (it != vocab_.end()) ++counts[it->second];
  }
  SparseVector v(counts.begin(), counts.end());
  std::sort(v.begin(), v.end());
  for (auto& [term, w] : v) w *= idf_[term];
  return v;
}

std::vector<double> TfidfModel::chapter_similarities(const SparseVector& v) const {
  double norm2 = 0;
  for (const auto& [t, w] : v) norm2 += w * w;
  const double vnorm = std::sqrt(norm2);
  std::vector<double> sims(chapter_vectors_.size(), 0.0);
  if (vnorm == 0) return sims;
  for (std::size_t c = 0; c < chapter_vectors_.size(); ++c) {
    if (chapter_norms_[c] == 0) continue;
    const auto& cv = chapter_vectors_[c];
    double dot = 0;
    std::size_t i = 0, j = 0;
    while (i < v.size() && j < cv.size()) {
      if (v[i].first < cv[j].first) {
        ++i;
      } else if (cv[j].first < v[i].first) {
        ++j;
      } else {
        dot += v[i].second * cv[j].second;
        ++i;
        ++j;
      }
    }
    sims[c] = dot / (vnorm * chapter_norms_[c]);
  }
  return sims;
}

namespace {

// First index of the maximum; -1 for empty input.
int argmax_lowest(const std::vector<double>& v) {
  int best = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (best < 0 || v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

AlignmentGraph align_tfidf(const Summary& summary, const Novel& novel) {
  if (summary.novel_id != novel.id) {
    throw Error(ErrorKind::validation, "summary " + summary.id + " belongs to " + summary.novel_id + ", not " + novel.id);
  }
  const TfidfModel model(novel);
  AlignmentGraph graph(summary.id, novel.id, summary.n_sentences(), novel.n_chapters(), AlignMethod::tfidf);
  for (const auto& s : summary.sentences) {
    const auto v = model.vectorize(s.text);
    if (v.empty()) continue;
    const int best = argmax_lowest(model.chapter_similarities(v));
    graph.add_edge(s.index, best + 1);
  }
  return graph;
}

// ---------------------------------------------------------------------------
// Embeddings

const std::vector<double>& EmbeddingTable::at(const std::string& id) const {
  auto it = vectors.find(id);
  if (it == vectors.end()) throw Error(ErrorKind::validation, "missing embedding vector for " + id);
  return it->second;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  EmbeddingTable t;
  try {
    t.dimension = j.at("dimension").get<int>();
    if (t.dimension < 1) throw Error(ErrorKind::validation, path.string() + ": dimension must be positive");
    for (const auto& [id, arr] : j.at("vectors").items()) {
      std::vector<double> v;
      for (const auto& x : arr) {
        if (!x.is_number()) throw Error(ErrorKind::validation, path.string() + ": non-numeric entry in " + id);
        v.push_back(x.get<double>());
      }
      if (static_cast<int>(v.size()) != t.dimension) {
        throw Error(ErrorKind::validation, path.string() + ": vector " + id + " has length " +
                                               std::to_string(v.size()) + ", expected " + std::to_string(t.dimension));
      }
      if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) {
        throw Error(ErrorKind::validation, path.string() + ": NaN in vector " + id);
      }
      t.vectors.emplace(id, std::move(v));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, path.string() + ": malformed embedding table: " + e.what());
  }
  return t;
}

std::string sentence_unit_id(std::string_view summary_id, int sentence_index) {
  return std::string(summary_id) + ":s" + std::to_string(sentence_index);
}

std::string chapter_unit_id(std::string_view novel_id, int chapter_index) {
  return std::string(novel_id) + ":c" + std::to_string(chapter_index);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

AlignmentGraph align_embedding(const Summary& summary, const Novel& novel, const EmbeddingTable& table) {
  if (summary.novel_id != novel.id) {
    throw Error(ErrorKind::validation, "summary " + summary.id + " belongs to " + summary.novel_id + ", not " + novel.id);
  }
  std::vector<const std::vector<double>*> chapters;
  for (const auto& c : novel.chapters) chapters.push_back(&table.at(chapter_unit_id(novel.id, c.index)));
  AlignmentGraph graph(summary.id, novel.id, summary.n_sentences(), novel.n_chapters(), AlignMethod::embedding);
  for (const auto& s : summary.sentences) {
    const auto& sv = table.at(sentence_unit_id(summary.id, s.index));
    std::vector<double> sims;
    sims.reserve(chapters.size());
    for (const auto* cv : chapters) sims.push_back(cosine_similarity(sv, *cv));
    const int best = argmax_lowest(sims);
    if (best >= 0) graph.add_edge(s.index, best + 1);
  }
  return graph;
}

}  // namespace ea
