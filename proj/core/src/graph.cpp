#include "ea/graph.hpp"

#include <nlohmann/json.hpp>

#include "ea/error.hpp"
#include "ea/io.hpp"

namespace ea {

using nlohmann::json;

std::string_view to_string(AlignMethod m) {
  switch (m) {
    case AlignMethod::llm:
      return "llm";
    case AlignMethod::tfidf:
      return "tfidf";
    case AlignMethod::embedding:
      return "embedding";
    case AlignMethod::gold:
      return "gold";
  }
  return "llm";
}

std::optional<AlignMethod> parse_align_method(std::string_view s) {
  if (s == "llm") return AlignMethod::llm;
  if (s == "tfidf") return AlignMethod::tfidf;
  if (s == "embedding") return AlignMethod::embedding;
  if (s == "gold") return AlignMethod::gold;
  return std::nullopt;
}

AlignmentGraph::AlignmentGraph(std::string summary_id, std::string novel_id, int n_sentences, int n_chapters,
                               AlignMethod method)
    : summary_id_(std::move(summary_id)),
      novel_id_(std::move(novel_id)),
      n_sentences_(n_sentences),
      n_chapters_(n_chapters),
      method_(method) {
  if (n_sentences < 0 || n_chapters < 0) throw Error(ErrorKind::validation, "negative graph dimensions");
}

void AlignmentGraph::add_edge(int sentence, int chapter) {
  if (sentence < 1 || sentence > n_sentences_ || chapter < 1 || chapter > n_chapters_) {
    throw Error(ErrorKind::validation, "edge (" + std::to_string(sentence) + ", " + std::to_string(chapter) +
                                           ") outside " + std::to_string(n_sentences_) + "x" +
                                           std::to_string(n_chapters_) + " for summary " + summary_id_);
  }
  edges_.insert({sentence, chapter});
}

std::vector<int> AlignmentGraph::sentence_degrees() const {
  std::vector<int> d(static_cast<std::size_t>(n_sentences_) + 1, 0);
  for (const auto& e : edges_) ++d[e.sentence];
  return d;
}

std::vector<int> AlignmentGraph::chapter_degrees() const {
  std::vector<int> d(static_cast<std::size_t>(n_chapters_) + 1, 0);
  for (const auto& e : edges_) ++d[e.chapter];
  return d;
}

namespace {

json edges_json(const std::set<Edge>& edges) {
  json arr = json::array();
  for (const auto& e : edges) arr.push_back({e.sentence, e.chapter});
  return arr;
}

std::set<Edge> parse_edges(const json& j, int n_s, int n_c, const std::string& origin) {
  std::set<Edge> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) throw Error(ErrorKind::validation, origin + ": edges must be [s, c] pairs");
    Edge edge{e[0].get<int>(), e[1].get<int>()};
    if (edge.sentence < 1 || edge.sentence > n_s || edge.chapter < 1 || edge.chapter > n_c) {
      throw Error(ErrorKind::validation, origin + ": edge [" + std::to_string(edge.sentence) + ", " +
                                             std::to_string(edge.chapter) + "] out of bounds");
    }
    if (!out.insert(edge).second) {
      throw Error(ErrorKind::validation, origin + ": duplicate edge [" + std::to_string(edge.sentence) + ", " +
                                             std::to_string(edge.chapter) + "]");
    }
  }
  return out;
}

}  // namespace

std::string graph_to_json(const AlignmentGraph& g) {
  json diags = json::array();
  for (const auto& d : g.diagnostics) {
    json dj = {{"chapter", d.chapter}, {"old_ids", d.old_ids}, {"parts", d.parts},
               {"attempts", d.attempts}, {"skipped", d.skipped}};
    if (!d.message.empty()) dj["message"] = d.message;
    diags.push_back(std::move(dj));
  }
  json j = {{"summary_id", g.summary_id()}, {"novel_id", g.novel_id()}, {"n_sentences", g.n_sentences()},
            {"n_chapters", g.n_chapters()},  {"method", to_string(g.method())}, {"edges", edges_json(g.edges())},
            {"diagnostics", std::move(diags)}};
  return dump_json(j);
}

AlignmentGraph graph_from_json(std::string_view text, const std::string& origin) {
  try {
    const json j = json::parse(text);
    auto method = parse_align_method(j.at("method").get<std::string>());
    if (!method) throw Error(ErrorKind::validation, origin + ": unknown method");
    AlignmentGraph g(j.at("summary_id").get<std::string>(), j.at("novel_id").get<std::string>(),
                     j.at("n_sentences").get<int>(), j.at("n_chapters").get<int>(), *method);
    for (const auto& e : parse_edges(j.at("edges"), g.n_sentences(), g.n_chapters(), origin)) {
      g.add_edge(e.sentence, e.chapter);
    }
    if (j.contains("diagnostics")) {
      for (const auto& dj : j.at("diagnostics")) {
        if (!dj.is_object()) continue;
        ChapterDiagnostic d;
        d.chapter = dj.value("chapter", 0);
        d.old_ids = dj.value("old_ids", std::vector<int>{});
        d.parts = dj.value("parts", 1);
        d.attempts = dj.value("attempts", 0);
        d.skipped = dj.value("skipped", false);
        d.message = dj.value("message", std::string());
        g.diagnostics.push_back(std::move(d));
      }
    }
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, origin + ": malformed graph: " + e.what());
  }
}

AlignmentGraph load_graph(const std::filesystem::path& path) {
  return graph_from_json(read_text_file(path), path.string());
}

void save_graph(const std::filesystem::path& path, const AlignmentGraph& graph) {
  write_text_file(path, graph_to_json(graph));
}

std::string gold_to_json(const GoldAlignment& gold) {
  json j = {{"summary_id", gold.summary_id}, {"novel_id", gold.novel_id}, {"n_sentences", gold.n_sentences},
            {"n_chapters", gold.n_chapters},  {"method", "gold"},         {"annotator", gold.annotator},
            {"edges", edges_json(gold.edges)}};
  return dump_json(j);
}

GoldAlignment load_gold(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    if (j.value("method", std::string("gold")) != "gold") {
      throw Error(ErrorKind::validation, path.string() + ": gold file must have method \"gold\"");
    }
    GoldAlignment g;
    g.summary_id = j.at("summary_id").get<std::string>();
    g.novel_id = j.at("novel_id").get<std::string>();
    g.annotator = j.value("annotator", std::string());
    g.n_sentences = j.at("n_sentences").get<int>();
    g.n_chapters = j.at("n_chapters").get<int>();
    g.edges = parse_edges(j.at("edges"), g.n_sentences, g.n_chapters, path.string());
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, path.string() + ": malformed gold file: " + e.what());
  }
}

AlignmentGraph as_graph(const GoldAlignment& gold) {
  AlignmentGraph g(gold.summary_id, gold.novel_id, gold.n_sentences, gold.n_chapters, AlignMethod::gold);
  for (const auto& e : gold.edges) g.add_edge(e.sentence, e.chapter);
  return g;
}

}  // namespace ea
