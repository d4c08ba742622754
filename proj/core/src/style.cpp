#include "ea/style.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ea/error.hpp"
#include "ea/io.hpp"
#include "ea/text.hpp"

namespace ea {

using nlohmann::json;

NgramProfile::NgramProfile(std::string_view text) {
  const auto toks = lowercase_tokens(text);
  length_ = toks.size();
  for (int n = 1; n <= kMaxOrder; ++n) {
    auto& counts = counts_[n - 1];
    if (toks.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key = toks[i];
      for (int k = 1; k < n; ++k) {
        key += '\x1f';
        key += toks[i + k];
      }
      ++counts[key];
    }
  }
}

std::size_t NgramProfile::total(int order) const {
  return length_ >= static_cast<std::size_t>(order) ? length_ - order + 1 : 0;
}

double bleu(const NgramProfile& cand, const NgramProfile& ref) {
  if (cand.length() == 0) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= NgramProfile::kMaxOrder; ++n) {
    std::size_t matches = 0;
    const auto& rc = ref.counts(n);
    for (const auto& [gram, count] : cand.counts(n)) {
      auto it = rc.find(gram);
      if (it != rc.end()) matches += static_cast<std::size_t>(std::min(count, it->second));
    }
    const double total = static_cast<double>(cand.total(n));
    double p;
    if (matches > 0) {
      p = static_cast<double>(matches) / total;
    } else if (n == 1) {
      return 0.0;
    } else {
      p = 1.0 / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(cand.length());
  const double r = static_cast<double>(ref.length());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(log_sum / NgramProfile::kMaxOrder);
}

double bleu(std::string_view candidate, std::string_view reference) {
  return bleu(NgramProfile(candidate), NgramProfile(reference));
}

// ---------------------------------------------------------------------------

void validate_sentence(const AnnotatedSentence& s, const std::string& where) {
  const int n = static_cast<int>(s.tokens.size());
  if (n == 0) throw Error(ErrorKind::validation, where + ": sentence has no tokens");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const int h = s.tokens[i].head;
    if (h < 0 || h > n) {
      throw Error(ErrorKind::validation, where + ", token " + std::to_string(i + 1) + ": head index " +
                                             std::to_string(h) + " outside 0.." + std::to_string(n));
    }
    if (h == 0) ++roots;
  }
  if (roots == 0) throw Error(ErrorKind::validation, where + ": sentence has no root token");
  std::vector<std::pair<int, int>> spans;
  for (const auto& e : s.entities) {
    if (e.start_token < 1 || e.end_token > n || e.end_token < e.start_token) {
      throw Error(ErrorKind::validation, where + ": entity span [" + std::to_string(e.start_token) + ", " +
                                             std::to_string(e.end_token) + "] out of bounds");
    }
    spans.emplace_back(e.start_token, e.end_token);
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first <= spans[i - 1].second) {
      throw Error(ErrorKind::validation, where + ": overlapping entity spans at token " +
                                             std::to_string(spans[i].first));
    }
  }
}

AnnotationDocument parse_annotations(std::string_view text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::validation, origin + ": malformed JSON: " + e.what());
  }
  AnnotationDocument doc;
  try {
    doc.doc_id = j.at("doc_id").get<std::string>();
    if (j.contains("pipeline_version") && j.at("pipeline_version").is_string()) {
      doc.pipeline_version = j.at("pipeline_version").get<std::string>();
    }
    int si = 0;
    for (const auto& sj : j.at("sentences")) {
      ++si;
      AnnotatedSentence s;
      for (const auto& tj : sj.at("tokens")) {
        s.tokens.push_back({tj.at("text").get<std::string>(), tj.at("head").get<int>()});
      }
      if (sj.contains("entities")) {
        for (const auto& ej : sj.at("entities")) {
          s.entities.push_back(
              {ej.at("start_token").get<int>(), ej.at("end_token").get<int>(), ej.at("label").get<std::string>()});
        }
      }
      validate_sentence(s, origin + ": sentence " + std::to_string(si));
      doc.sentences.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, origin + ": annotation schema violation: " + e.what());
  }
  return doc;
}

AnnotationDocument load_annotation_document(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path), path.string());
}

std::vector<AnnotatedSentence> load_annotations(const std::filesystem::path& path) {
  return load_annotation_document(path).sentences;
}

std::optional<double> dependency_distance(const std::vector<AnnotatedSentence>& sentences) {
  long long sum = 0;
  long long arcs = 0;
  for (const auto& s : sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const int h = s.tokens[i].head;
      if (h == 0) continue;
      sum += std::llabs(static_cast<long long>(i + 1) - h);
      ++arcs;
    }
  }
  if (arcs == 0) return std::nullopt;
  return static_cast<double>(sum) / static_cast<double>(arcs);
}

EntityDensity entity_density(const std::vector<AnnotatedSentence>& sentences) {
  std::size_t tokens = 0, entities = 0, persons = 0;
  for (const auto& s : sentences) {
    tokens += s.tokens.size();
    entities += s.entities.size();
    persons += static_cast<std::size_t>(
        std::count_if(s.entities.begin(), s.entities.end(), [](const EntitySpan& e) { return e.label == "PERSON"; }));
  }
  EntityDensity d;
  if (tokens == 0) return d;
  d.entities_per_100w = 100.0 * static_cast<double>(entities) / static_cast<double>(tokens);
  d.persons_per_100w = 100.0 * static_cast<double>(persons) / static_cast<double>(tokens);
  return d;
}

}  // namespace ea
