// Writes replay fixtures, gold files and annotation files from a plan.
//
//   ea_author_fixtures tests/fixtures/carmilla/plan.json
//
// The plan names a novel, the summaries a generator "returned" for each
// prompt, the sentence-to-chapter edges an aligner "answered", and two
// annotators' gold edges plus adjudication. Model replies are rendered into
// fixture files keyed exactly as the replay transport will look them up, so
// the plan is the single source for everything under llm/, gold/ and
// annotations/.

#include <algorithm>
#include <iostream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "ea/align_eval.hpp"
#include "ea/corpus.hpp"
#include "ea/error.hpp"
#include "ea/graph.hpp"
#include "ea/io.hpp"
#include "ea/llm_gateway.hpp"
#include "ea/pipeline.hpp"
#include "ea/prompts.hpp"
#include "ea/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json response_json(const std::string& text, const std::string& prompt) {
  return {{"text", text},
          {"finish_reason", "stop"},
          {"usage", {{"prompt_tokens", ea::count_tokens(prompt)}, {"completion_tokens", ea::count_tokens(text)}}},
          {"retries", 0}};
}

void write_fixture(const fs::path& dir, const ea::ChatRequest& req, const std::vector<std::string>& replies) {
  json j;
  j["request_key"] = req.request_key();
  j["request"] = {{"model", req.model},
                  {"prompt", req.prompt},
                  {"temperature", req.temperature},
                  {"max_output_tokens", req.max_output_tokens}};
  j["response"] = response_json(replies.front(), req.prompt);
  if (replies.size() > 1) {
    j["retries"] = json::array();
    for (std::size_t i = 1; i < replies.size(); ++i) j["retries"].push_back(response_json(replies[i], req.prompt));
  }
  ea::write_text_file(dir / (req.request_key() + ".json"), ea::dump_json(j));
}

std::string yes_no_object(int n_sentences, const std::set<int>& yes, bool fenced) {
  std::string body = "{";
  for (int s = 1; s <= n_sentences; ++s) {
    if (s > 1) body += ", ";
    body += "\"" + std::to_string(s) + "\": \"" + (yes.count(s) ? "YES" : "NO") + "\"";
  }
  body += "}";
  if (fenced) return "Here is the alignment for this chapter:\n```json\n" + body + "\n```";
  return body;
}

ea::Novel segmented_novel(const fs::path& dir) {
  const fs::path rules_path = dir / "segmentation.json";
  const auto rules = fs::exists(rules_path) ? ea::load_segmentation_rules(rules_path) : ea::SegmentationRules::defaults();
  const auto seg = ea::segment_chapters(ea::read_text_file(dir / "source.txt"), rules);
  const json meta = ea::read_json_file(dir / "meta.json");
  ea::Novel n;
  n.id = dir.filename().string();
  n.title = meta.at("title").get<std::string>();
  n.author = meta.at("author").get<std::string>();
  n.chapters = seg.chapters;
  return n;
}

ea::Summary make_summary(std::string id, std::string novel_id, const std::string& text) {
  ea::Summary s;
  s.id = std::move(id);
  s.novel_id = std::move(novel_id);
  s.raw_text = text;
  s.sentences = ea::split_sentences(ea::normalize_punctuation(text));
  return s;
}

/// Replays the sequential protocol against planned answers so each chapter's
/// prompt carries the ids matched in earlier chapters.
int author_alignment(const fs::path& fixture_dir, const ea::Summary& s, const ea::Novel& n, const json& plan,
                     const json& aligner) {
  std::map<int, std::set<int>> yes_by_chapter;
  for (const auto& e : plan.at("edges")) {
    const int sent = e[0].get<int>(), ch = e[1].get<int>();
    if (sent < 1 || sent > s.n_sentences() || ch < 1 || ch > n.n_chapters()) {
      throw ea::Error(ea::ErrorKind::validation, s.id + ": planned edge out of range");
    }
    yes_by_chapter[ch].insert(sent);
  }
  const auto flagged = [&](const char* key) {
    std::set<int> out;
    if (plan.contains(key)) {
      for (const auto& c : plan.at(key)) out.insert(c.get<int>());
    }
    return out;
  };
  const auto unparseable = flagged("unparseable_first");
  const auto fenced = flagged("fenced");

  std::set<int> matched;
  int written = 0;
  for (const auto& chapter : n.chapters) {
    ea::ChatRequest req;
    req.model = aligner.at("model").get<std::string>();
    req.temperature = aligner.value("temperature", 0.0);
    req.max_output_tokens = aligner.value("max_output_tokens", 4096);
    req.prompt = ea::render_alignment_prompt(s, chapter, matched);
    const auto& yes = yes_by_chapter[chapter.index];
    std::vector<std::string> replies;
    if (unparseable.count(chapter.index)) {
      replies.push_back("I need to read the chapter again before deciding which sentences it supports.");
    }
    replies.push_back(yes_no_object(s.n_sentences(), yes, fenced.count(chapter.index) > 0));
    write_fixture(fixture_dir, req, replies);
    ++written;
    matched.insert(yes.begin(), yes.end());
  }
  return written;
}

/// Structural stand-in for parser output: every token attaches to the
/// middle token of its sentence; entity spans come from the plan's name
/// lists by longest match.
json synthetic_annotation(const ea::Summary& s, const json& entities) {
  std::vector<std::pair<std::vector<std::string>, std::string>> names;
  for (const auto& [label, list] : entities.items()) {
    for (const auto& name : list) {
      std::vector<std::string> toks;
      for (auto t : ea::tokenize(name.get<std::string>())) toks.emplace_back(t);
      names.emplace_back(std::move(toks), label);
    }
  }
  std::sort(names.begin(), names.end(), [](const auto& a, const auto& b) {
    return a.first.size() != b.first.size() ? a.first.size() > b.first.size() : a < b;
  });

  json sentences = json::array();
  for (const auto& sent : s.sentences) {
    std::vector<std::string> toks;
    for (auto t : ea::tokenize(sent.text)) toks.emplace_back(t);
    const int k = static_cast<int>(toks.size());
    const int root = (k + 1) / 2;
    json tokens = json::array();
    for (int i = 1; i <= k; ++i) tokens.push_back({{"text", toks[i - 1]}, {"head", i == root ? 0 : root}});
    json spans = json::array();
    for (int i = 0; i < k;) {
      bool hit = false;
      for (const auto& [name, label] : names) {
        const int len = static_cast<int>(name.size());
        if (len == 0 || i + len > k) continue;
        if (std::equal(name.begin(), name.end(), toks.begin() + i)) {
          spans.push_back({{"start_token", i + 1}, {"end_token", i + len}, {"label", label}});
          i += len;
          hit = true;
          break;
        }
      }
      if (!hit) ++i;
    }
    sentences.push_back({{"tokens", tokens}, {"entities", spans}});
  }
  return {{"doc_id", s.id}, {"pipeline_version", "synthetic-fixture-1"}, {"sentences", sentences}};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: ea_author_fixtures <plan.json>\n";
    return 1;
  }
  try {
    const fs::path plan_path = fs::absolute(argv[1]);
    const fs::path base = plan_path.parent_path();
    const json plan = ea::read_json_file(plan_path);
    const fs::path corpus = base / plan.at("corpus").get<std::string>();
    const fs::path fixtures = base / plan.at("fixture_dir").get<std::string>();
    const fs::path gold_dir = base / plan.at("gold_dir").get<std::string>();
    const fs::path ann_dir = base / plan.at("annotations_dir").get<std::string>();
    for (const auto& d : {fixtures, gold_dir, ann_dir}) fs::remove_all(d);

    const ea::Novel novel = segmented_novel(corpus / "novels" / plan.at("novel").get<std::string>());
    std::map<std::string, ea::Summary> summaries;
    for (const auto& e : fs::directory_iterator(corpus / "summaries")) {
      const ea::Summary s = ea::load_summary(e.path());
      summaries.emplace(s.id, s);
    }

    const std::string guidelines = ea::read_text_file(base / plan.at("guidelines").get<std::string>());
    const json& gen = plan.at("generator");
    int n_generation = 0;
    for (const auto& [variant_name, text] : plan.at("generations").items()) {
      const auto variant = ea::parse_prompt_variant(variant_name);
      if (!variant) throw ea::Error(ea::ErrorKind::validation, "unknown prompt variant " + variant_name);
      ea::ChatRequest req;
      req.model = gen.at("model").get<std::string>();
      req.temperature = gen.value("temperature", 0.0);
      req.max_output_tokens = gen.value("max_output_tokens", 4096);
      req.prompt = ea::render_generation_prompt(*variant, novel, guidelines);
      write_fixture(fixtures, req, {text.get<std::string>()});
      ++n_generation;
      const std::string id = ea::generated_summary_id(novel.id, req.model, *variant);
      summaries.emplace(id, make_summary(id, novel.id, text.get<std::string>()));
    }

    int n_alignment = 0;
    for (const auto& [id, entry] : plan.at("alignments").items()) {
      auto it = summaries.find(id);
      if (it == summaries.end()) throw ea::Error(ea::ErrorKind::validation, "plan aligns unknown summary " + id);
      n_alignment += author_alignment(fixtures, it->second, novel, entry, plan.at("aligner"));
    }

    const json& g = plan.at("gold");
    const ea::Summary& gs = summaries.at(g.at("summary_id").get<std::string>());
    std::map<std::string, ea::GoldAlignment> raters;
    for (const auto& [who, edges] : g.at("annotators").items()) {
      ea::GoldAlignment a{novel.id, gs.id, who, gs.n_sentences(), novel.n_chapters(), {}};
      for (const auto& e : edges) a.edges.insert({e[0].get<int>(), e[1].get<int>()});
      ea::write_text_file(gold_dir / (gs.id + "." + who + ".json"), ea::gold_to_json(a));
      raters.emplace(who, std::move(a));
    }
    std::vector<ea::Resolution> resolutions;
    for (const auto& r : g.at("resolutions")) resolutions.push_back({{r[0].get<int>(), r[1].get<int>()}, r[2].get<bool>()});
    const auto adjudicated = ea::adjudicate(raters.begin()->second, std::next(raters.begin())->second, resolutions);
    ea::write_text_file(gold_dir / (gs.id + ".adjudicated.json"), ea::gold_to_json(adjudicated));

    for (const auto& [id, s] : summaries) {
      ea::write_text_file(ann_dir / (id + ".ann.json"), ea::dump_json(synthetic_annotation(s, plan.at("entities"))));
    }

    std::cout << novel.n_chapters() << " chapters, " << n_generation << " generation fixtures, " << n_alignment
              << " alignment fixtures, " << adjudicated.edges.size() << " adjudicated gold edges\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
