#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <sstream>
#include <random>
#include <string>

#include "ea/corpus.hpp"
#include "ea/graph.hpp"
#include "ea/io.hpp"
#include "ea/llm_gateway.hpp"
#include "ea/pipeline.hpp"
#include "ea/text.hpp"

namespace ea::test {

inline const std::filesystem::path kFixtureDir{EA_FIXTURE_DIR};
inline const std::filesystem::path kGoldenDir{EA_GOLDEN_DIR};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "ea") {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

/// Copies the named fixture set into `dest` and returns the copy's root.
inline std::filesystem::path copy_fixture(const std::string& name, const std::filesystem::path& dest) {
  const auto target = dest / name;
  std::filesystem::copy(kFixtureDir / name, target, std::filesystem::copy_options::recursive);
  return target;
}

inline Novel make_novel(const std::string& id, const std::vector<std::string>& chapter_texts,
                        const std::string& title = "T", const std::string& author = "A") {
  Novel n;
  n.id = id;
  n.title = title;
  n.author = author;
  int i = 0;
  for (const auto& t : chapter_texts) {
    Chapter c;
    c.index = ++i;
    c.text = t;
    c.token_count = count_tokens(t);
    n.chapters.push_back(c);
  }
  return n;
}

inline Summary make_summary(const std::string& id, const std::string& novel_id, const std::vector<std::string>& sentences) {
  Summary s;
  s.id = id;
  s.novel_id = novel_id;
  int i = 0;
  for (const auto& t : sentences) {
    s.sentences.push_back({++i, t, count_tokens(t)});
    if (!s.raw_text.empty()) s.raw_text += ' ';
    s.raw_text += t;
  }
  return s;
}

inline GoldAlignment make_gold(int n_s, int n_c, std::set<Edge> edges, const std::string& who = "a") {
  return GoldAlignment{"n", "s", who, n_s, n_c, std::move(edges)};
}

inline AlignmentGraph make_graph(int n_s, int n_c, const std::set<Edge>& edges, AlignMethod m = AlignMethod::llm) {
  AlignmentGraph g("s", "n", n_s, n_c, m);
  for (const auto& e : edges) g.add_edge(e.sentence, e.chapter);
  return g;
}

/// Stores `replies` for `req` the way the replay transport reads them:
/// the first as the response, the rest as numbered re-asks.
inline void write_fixture(const std::filesystem::path& dir, const ChatRequest& req,
                          const std::vector<std::string>& replies) {
  nlohmann::json j;
  j["request_key"] = req.request_key();
  j["request"] = {{"model", req.model}, {"prompt", req.prompt}, {"temperature", req.temperature}};
  j["response"] = {{"text", replies.at(0)}, {"finish_reason", "stop"}};
  for (std::size_t i = 1; i < replies.size(); ++i) j["retries"].push_back({{"text", replies[i]}});
  write_text_file(dir / (req.request_key() + ".json"), dump_json(j));
}

struct ReplayRun {
  std::filesystem::path root;    // copy of the fixture set
  std::filesystem::path output;  // its output_root
  double seconds = 0;
  std::string log;
};

/// ingest, generate, align (llm), evaluate, metrics and report over a fresh
/// copy of the Carmilla fixture set, all through the replay transport.
inline ReplayRun run_replay_pipeline(const std::filesystem::path& scratch) {
  ReplayRun r;
  r.root = copy_fixture("carmilla", scratch);
  const auto start = std::chrono::steady_clock::now();
  const RunConfig config = load_run_config(r.root / "run.json");
  std::ostringstream log;
  CommandOptions opts;
  opts.log = &log;
  cmd_ingest(config, opts);
  cmd_generate(config, opts);
  cmd_align(config, opts);
  cmd_evaluate(config, opts);
  cmd_metrics(config, opts);
  cmd_report(config, opts);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.output = config.output_root;
  r.log = log.str();
  return r;
}

/// sha256 of every file under `dir` except run bookkeeping: manifests carry
/// timings, and the stage cache only exists to skip work.
inline std::map<std::string, std::string> output_hashes(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = std::filesystem::relative(e.path(), dir).generic_string();
    if (rel.rfind("manifests/", 0) == 0 || rel.rfind("cache/", 0) == 0) continue;
    out[rel] = sha256_file(e.path());
  }
  return out;
}

inline std::map<std::string, std::string> golden_replay_hashes() {
  return read_json_file(kGoldenDir / "replay_hashes.json").get<std::map<std::string, std::string>>();
}

}  // namespace ea::test
