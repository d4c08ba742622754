#include "ea/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ea/align_eval.hpp"
#include "ea/error.hpp"
#include "ea/io.hpp"
#include "ea/prompts.hpp"
#include "ea/stats.hpp"
#include "ea/style.hpp"
#include "ea/text.hpp"

namespace ea {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Small helpers

std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_number(std::optional<double> v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", std::fabs(*v) < 5e-7 ? 0.0 : *v);  // no "-0.000000"
  return buf;
}

std::string slugify(std::string_view s) {
  std::string out;
  bool dash = false;
  for (char c : s) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                      c == '_' || c == '-';
    if (keep) {
      out += c;
      dash = false;
    } else if (!dash) {
      out += '-';
      dash = true;
    }
  }
  return out;
}

std::string generated_summary_id(std::string_view novel_id, std::string_view model, PromptVariant variant) {
  return std::string(novel_id) + "__" + slugify(model) + "__" + std::string(to_string(variant));
}

std::size_t planned_generation_requests(std::size_t n_novels, std::size_t n_models, std::size_t n_prompts) {
  return n_novels * n_models * n_prompts;
}

namespace {

std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\n";
}

std::string rel_path(const fs::path& p, const fs::path& base) { return p.lexically_relative(base).generic_string(); }

std::ostream& log_of(const CommandOptions& o) { return o.log ? *o.log : std::clog; }

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
/// non-fixture-miss exception is rethrown; fixture misses are returned.
template <typename Fn>
std::vector<std::string> parallel_for(std::size_t n, int workers, Fn fn) {
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::vector<std::string> misses;
  std::exception_ptr failure;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        fn(i);
      } catch (const Error& e) {
        std::lock_guard lock(mu);
        if (e.kind() == ErrorKind::fixture_miss) {
          misses.push_back(e.what());
        } else if (!failure) {
          failure = std::current_exception();
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int k = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (k == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < k; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(misses.begin(), misses.end());
  return misses;
}

/// Output path -> (input hash, content hash), persisted per stage so
/// re-runs can skip work whose inputs did not change.
class StageCache {
 public:
  StageCache(fs::path output_root, const std::string& stage)
      : root_(std::move(output_root)), file_(root_ / "cache" / (stage + ".json")) {
    if (fs::exists(file_)) {
      try {
        entries_ = read_json_file(file_);
      } catch (const Error&) {
        entries_ = json::object();
      }
    }
    if (!entries_.is_object()) entries_ = json::object();
  }

  bool current(const std::string& rel, const std::string& input_hash) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(rel);
    if (it == entries_.end() || !it->is_object()) return false;
    if (it->value("input", std::string()) != input_hash) return false;
    const fs::path p = root_ / rel;
    return fs::exists(p) && sha256_file(p) == it->value("sha256", std::string());
  }

  std::string content_hash(const std::string& rel) const {
    std::lock_guard lock(mu_);
    return entries_.at(rel).at("sha256").get<std::string>();
  }

  void record(const std::string& rel, const std::string& input_hash, const std::string& sha) {
    std::lock_guard lock(mu_);
    entries_[rel] = {{"input", input_hash}, {"sha256", sha}};
  }

  void save() const {
    std::lock_guard lock(mu_);
    write_text_file(file_, dump_json(entries_));
  }

 private:
  fs::path root_;
  fs::path file_;
  json entries_ = json::object();
  mutable std::mutex mu_;
};

/// Collects produced files for a stage and writes its manifest.
class StageRun {
 public:
  StageRun(const RunConfig& config, std::string stage)
      : config_(config), cache_(config.output_root, stage), start_(std::chrono::steady_clock::now()) {
    manifest_.stage = std::move(stage);
    manifest_.config_hash = config.hash();
    manifest_.run_id = manifest_.config_hash.substr(0, 12);
  }

  const fs::path& out() const { return config_.output_root; }
  StageCache& cache() { return cache_; }
  Manifest& manifest() { return manifest_; }

  /// Writes `content` unless the cached entry for `input_hash` is current.
  void emit(const fs::path& path, const std::string& content, const std::string& input_hash) {
    const std::string rel = rel_path(path, out());
    std::string sha;
    if (cache_.current(rel, input_hash)) {
      sha = cache_.content_hash(rel);
    } else {
      write_text_file(path, content);
      sha = sha256_hex(content);
      cache_.record(rel, input_hash, sha);
      ++written_;
    }
    add_produced(rel, sha);
  }

  /// For outputs whose content is only computed when stale.
  bool reuse(const fs::path& path, const std::string& input_hash) {
    const std::string rel = rel_path(path, out());
    if (!cache_.current(rel, input_hash)) return false;
    add_produced(rel, cache_.content_hash(rel));
    return true;
  }

  void add_produced(const std::string& rel, const std::string& sha) {
    std::lock_guard lock(mu_);
    manifest_.produced_files.push_back({rel, sha});
  }

  void add_input(const std::string& rel, const std::string& sha) {
    std::lock_guard lock(mu_);
    manifest_.input_files.push_back({rel, sha});
  }

  void notice(const std::string& text, std::ostream& log) {
    std::lock_guard lock(mu_);
    manifest_.notices.push_back(text);
    log << manifest_.stage << ": " << text << "\n";
  }

  Manifest finish() {
    const auto by_path = [](const FileHash& a, const FileHash& b) { return a.path < b.path; };
    std::sort(manifest_.produced_files.begin(), manifest_.produced_files.end(), by_path);
    std::sort(manifest_.input_files.begin(), manifest_.input_files.end(), by_path);
    manifest_.reused = written_ == 0 && !manifest_.produced_files.empty();
    manifest_.timings[manifest_.stage] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    cache_.save();
    write_text_file(out() / "manifests" / (manifest_.stage + ".json"), dump_json(manifest_.to_json()));
    return manifest_;
  }

 private:
  const RunConfig& config_;
  StageCache cache_;
  Manifest manifest_;
  std::chrono::steady_clock::time_point start_;
  std::mutex mu_;
  std::atomic<int> written_{0};
};

std::string novel_hash(const Novel& n) {
  std::string all = n.id + "\n" + n.title + "\n" + n.author + "\n";
  for (const auto& c : n.chapters) all += sha256_hex(c.text);
  return sha256_hex(all);
}

std::string summary_hash(const Summary& s) {
  json j = {{"id", s.id},
            {"novel_id", s.novel_id},
            {"author_kind", to_string(s.author_kind)},
            {"model_name", s.model_name.value_or("")},
            {"prompt_variant", s.prompt_variant ? std::string(to_string(*s.prompt_variant)) : ""},
            {"raw_text", s.raw_text}};
  return sha256_hex(j.dump());
}

std::vector<fs::path> summary_dirs(const RunConfig& config) {
  std::vector<fs::path> dirs = config.summary_dirs;
  dirs.push_back(config.output_root / "generated");
  return dirs;
}

Corpus load_run_corpus(const RunConfig& config) { return load_corpus(config.corpus_root, summary_dirs(config)); }

std::vector<PromptVariant> effective_prompts(const RunConfig& config, const CommandOptions& o) {
  return o.prompts ? *o.prompts : config.prompts;
}

std::string summary_model(const Summary& s) { return s.model_name.value_or(""); }
std::string summary_prompt(const Summary& s) {
  return s.prompt_variant ? std::string(to_string(*s.prompt_variant)) : std::string();
}

bool selected(const Summary& s, const CommandOptions& o, const std::vector<PromptVariant>& prompts) {
  if (s.author_kind == AuthorKind::human) return true;
  if (!o.models.empty() && std::find(o.models.begin(), o.models.end(), *s.model_name) == o.models.end()) return false;
  return std::find(prompts.begin(), prompts.end(), *s.prompt_variant) != prompts.end();
}

TransportOptions transport_options(const RunConfig& config, const CommandOptions& o) {
  TransportOptions t = config.transport;
  if (o.transport_mode) t.mode = *o.transport_mode;
  return t;
}

int effective_workers(const RunConfig& config, const CommandOptions& o) {
  return std::max(1, o.workers.value_or(config.workers));
}

std::string fixture_miss_report(const std::vector<std::string>& misses) {
  std::string msg = std::to_string(misses.size()) + " fixture miss" + (misses.size() == 1 ? "" : "es") + ":";
  for (const auto& m : misses) msg += "\n  " + m;
  return msg;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

json RunConfig::to_json() const {
  json gens = json::array();
  for (const auto& g : generators) {
    gens.push_back({{"model", g.model}, {"temperature", g.temperature}, {"max_output_tokens", g.max_output_tokens}});
  }
  json prompt_names = json::array();
  for (auto p : prompts) prompt_names.push_back(to_string(p));
  auto opt_path = [](const std::optional<fs::path>& p) { return p ? json(p->generic_string()) : json(nullptr); };
  json extra = json::array();
  for (const auto& d : summary_dirs) extra.push_back(d.generic_string());
  return {
      {"corpus_root", corpus_root.generic_string()},
      {"output_root", output_root.generic_string()},
      {"aligner",
       {{"model", aligner.model},
        {"temperature", aligner.temperature},
        {"max_output_tokens", aligner.max_output_tokens},
        {"parse_retries", aligner.parse_retries},
        {"context_budget_tokens", aligner.context_budget_tokens}}},
      {"generators", gens},
      {"transport",
       {{"mode", to_string(transport.mode)},
        {"fixture_dir", transport.fixture_dir.generic_string()},
        {"endpoint", transport.endpoint},
        {"provider", transport.provider},
        {"max_retries", transport.max_retries},
        {"rpm", transport.rpm},
        {"base_backoff_ms", transport.base_backoff.count()},
        {"max_backoff_ms", transport.max_backoff.count()},
        {"timeout_s", transport.timeout.count()}}},
      {"prompts", prompt_names},
      {"alpha", alpha},
      {"heatmap_bins", heatmap_bins},
      {"seed", seed},
      {"workers", workers},
      {"guidelines_path", opt_path(guidelines_path)},
      {"embeddings_path", opt_path(embeddings_path)},
      {"gold_dir", opt_path(gold_dir)},
      {"annotations_dir", opt_path(annotations_dir)},
      {"summary_dirs", extra},
      {"metrics_method", metrics_method},
  };
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

namespace {

[[noreturn]] void config_fail(const std::string& msg) { throw Error(ErrorKind::config, "run config: " + msg); }

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) config_fail(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) config_fail("unknown key '" + k + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

RunConfig parse_run_config(const json& j, const fs::path& base) {
  check_keys(j,
             {"corpus_root", "output_root", "aligner", "generators", "transport", "prompts", "alpha", "heatmap_bins",
              "seed", "workers", "guidelines_path", "embeddings_path", "gold_dir", "annotations_dir", "summary_dirs",
              "metrics_method"},
             "config");
  RunConfig c;
  try {
    if (!j.contains("corpus_root")) config_fail("missing corpus_root");
    if (!j.contains("output_root")) config_fail("missing output_root");
    c.corpus_root = resolve(base, j.at("corpus_root").get<std::string>());
    c.output_root = resolve(base, j.at("output_root").get<std::string>());

    if (j.contains("aligner")) {
      const auto& a = j.at("aligner");
      check_keys(a, {"model", "temperature", "max_output_tokens", "parse_retries", "context_budget_tokens"}, "aligner");
      c.aligner.model = a.value("model", std::string());
      c.aligner.temperature = a.value("temperature", 0.0);
      c.aligner.max_output_tokens = a.value("max_output_tokens", 4096);
      c.aligner.parse_retries = a.value("parse_retries", 3);
      c.aligner.context_budget_tokens = a.value("context_budget_tokens", 0);
      if (c.aligner.parse_retries < 0) config_fail("aligner.parse_retries must be >= 0");
      if (c.aligner.temperature < 0) config_fail("aligner.temperature must be >= 0");
    }
    if (j.contains("generators")) {
      for (const auto& g : j.at("generators")) {
        check_keys(g, {"model", "temperature", "max_output_tokens"}, "generator");
        GeneratorConfig gc;
        gc.model = g.at("model").get<std::string>();
        gc.temperature = g.value("temperature", 0.7);
        gc.max_output_tokens = g.value("max_output_tokens", 4096);
        if (gc.model.empty()) config_fail("generator model must be non-empty");
        if (gc.temperature < 0) config_fail("generator temperature must be >= 0");
        c.generators.push_back(gc);
      }
    }
    if (j.contains("transport")) {
      const auto& t = j.at("transport");
      check_keys(t,
                 {"mode", "fixture_dir", "endpoint", "provider", "max_retries", "rpm", "base_backoff_ms",
                  "max_backoff_ms", "timeout_s"},
                 "transport");
      const std::string mode = t.value("mode", std::string("replay"));
      if (mode == "live") {
        c.transport.mode = TransportMode::live;
      } else if (mode == "record") {
        c.transport.mode = TransportMode::record;
      } else if (mode == "replay") {
        c.transport.mode = TransportMode::replay;
      } else {
        config_fail("transport.mode must be live, record, or replay");
      }
      if (t.contains("fixture_dir")) c.transport.fixture_dir = resolve(base, t.at("fixture_dir").get<std::string>());
      c.transport.endpoint = t.value("endpoint", std::string());
      c.transport.provider = t.value("provider", std::string("openai"));
      c.transport.max_retries = t.value("max_retries", 5);
      c.transport.rpm = t.value("rpm", 0.0);
      c.transport.base_backoff = std::chrono::milliseconds(t.value("base_backoff_ms", 500));
      c.transport.max_backoff = std::chrono::milliseconds(t.value("max_backoff_ms", 30000));
      c.transport.timeout = std::chrono::seconds(t.value("timeout_s", 600));
    }
    if (j.contains("prompts")) {
      c.prompts.clear();
      for (const auto& p : j.at("prompts")) {
        auto v = parse_prompt_variant(p.get<std::string>());
        if (!v) config_fail("unknown prompt variant '" + p.get<std::string>() + "'");
        c.prompts.push_back(*v);
      }
    }
    c.alpha = j.value("alpha", 0.01);
    if (!(c.alpha > 0 && c.alpha < 1)) config_fail("alpha must be in (0, 1)");
    c.heatmap_bins = j.value("heatmap_bins", 20);
    if (c.heatmap_bins < 1) config_fail("heatmap_bins must be >= 1");
    c.seed = j.value("seed", std::uint64_t{0});
    c.workers = j.value("workers", 1);
    if (c.workers < 1) config_fail("workers must be >= 1");
    auto opt = [&](const char* key) -> std::optional<fs::path> {
      if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
      return resolve(base, j.at(key).get<std::string>());
    };
    c.guidelines_path = opt("guidelines_path");
    c.embeddings_path = opt("embeddings_path");
    c.gold_dir = opt("gold_dir");
    c.annotations_dir = opt("annotations_dir");
    if (j.contains("summary_dirs")) {
      for (const auto& d : j.at("summary_dirs")) c.summary_dirs.push_back(resolve(base, d.get<std::string>()));
    }
    c.metrics_method = j.value("metrics_method", std::string("llm"));
    if (!parse_align_method(c.metrics_method)) config_fail("unknown metrics_method '" + c.metrics_method + "'");
  } catch (const json::exception& e) {
    config_fail(std::string("wrong value type: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  return parse_run_config(j, fs::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Manifest

json Manifest::to_json() const {
  auto files = [](const std::vector<FileHash>& v) {
    json arr = json::array();
    for (const auto& f : v) arr.push_back({{"path", f.path}, {"sha256", f.sha256}});
    return arr;
  };
  return {{"stage", stage},
          {"run_id", run_id},
          {"config_hash", config_hash},
          {"input_files", files(input_files)},
          {"produced_files", files(produced_files)},
          {"timings", timings},
          {"notices", notices},
          {"reused", reused}};
}

Manifest load_manifest(const fs::path& path) {
  const json j = read_json_file(path);
  try {
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.run_id = j.at("run_id").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& f : j.value("input_files", json::array())) {
      m.input_files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    }
    for (const auto& f : j.at("produced_files")) {
      m.produced_files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>()});
    }
    m.timings = j.value("timings", std::map<std::string, double>{});
    m.notices = j.value("notices", std::vector<std::string>{});
    m.reused = j.value("reused", false);
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, path.string() + ": malformed manifest: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// ingest

Manifest cmd_ingest(const RunConfig& config, const CommandOptions& options) {
  StageRun run(config, "ingest");
  auto& log = log_of(options);
  const fs::path novels_dir = config.corpus_root / "novels";
  if (!fs::is_directory(novels_dir)) throw Error(ErrorKind::validation, novels_dir.string() + ": missing novels directory");

  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(novels_dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());

  std::map<std::string, Segmentation> segmentations;  // keyed by directory name
  for (const auto& dir : dirs) {
    const fs::path source = dir / "source.txt";
    if (!fs::exists(source)) continue;
    const fs::path rules_path = dir / "segmentation.json";
    const SegmentationRules rules =
        fs::exists(rules_path) ? load_segmentation_rules(rules_path) : SegmentationRules::defaults();
    const std::string raw = read_text_file(source);
    Segmentation seg = segment_chapters(raw, rules);
    if (seg.reassemble() != raw) {
      throw Error(ErrorKind::validation, source.string() + ": segmentation does not reproduce the source bytes");
    }
    const fs::path ch_dir = dir / "chapters";
    if (!fs::is_directory(ch_dir)) {
      write_chapters(dir, seg);
      run.notice("segmented " + rel_path(source, config.corpus_root) + " into " +
                     std::to_string(seg.chapters.size()) + " chapters",
                 log);
    } else {
      for (const auto& c : seg.chapters) {
        const fs::path p = ch_dir / chapter_file_name(c.index);
        if (!fs::exists(p) || read_text_file(p) != c.text) {
          throw Error(ErrorKind::validation,
                      p.string() + ": chapter file disagrees with segmentation of " + source.string() +
                          " (delete chapters/ to regenerate, or fix segmentation.json)");
        }
      }
      if (fs::exists(ch_dir / chapter_file_name(static_cast<int>(seg.chapters.size()) + 1))) {
        throw Error(ErrorKind::validation, ch_dir.string() + ": more chapter files than segmented chapters");
      }
    }
    if (seg.no_headings_warning) run.notice(rel_path(source, config.corpus_root) + ": no headings recognized", log);
    segmentations.emplace(dir.filename().string(), std::move(seg));
  }

  const Corpus corpus = load_run_corpus(config);

  std::string novels_csv = csv_row({"novel_id", "title", "author", "source_id", "n_chapters", "tokens"});
  for (std::size_t i = 0; i < corpus.novels.size(); ++i) {
    const Novel& n = corpus.novels[i];
    const fs::path dir = dirs[i];
    for (const auto& c : n.chapters) {
      const fs::path p = dir / "chapters" / chapter_file_name(c.index);
      run.add_input(rel_path(p, config.corpus_root), sha256_hex(c.text));
    }
    json headings = json::array();
    bool warning = false;
    auto seg_it = segmentations.find(dir.filename().string());
    if (seg_it != segmentations.end()) {
      for (const auto& h : seg_it->second.headings) {
        headings.push_back({{"line", h.line}, {"text", h.text}, {"pattern", h.pattern}});
      }
      warning = seg_it->second.no_headings_warning;
    } else {
      for (const auto& c : n.chapters) headings.push_back({{"chapter", c.index}, {"text", c.heading}});
    }
    json chapters = json::array();
    for (const auto& c : n.chapters) {
      chapters.push_back({{"index", c.index}, {"heading", c.heading}, {"tokens", c.token_count}});
    }
    json seg_manifest = {{"novel_id", n.id},           {"n_chapters", n.n_chapters()},
                         {"from_source", seg_it != segmentations.end()},
                         {"no_headings_warning", warning}, {"headings", headings},
                         {"chapters", chapters}};
    const std::string content = dump_json(seg_manifest);
    run.emit(config.output_root / "ingest" / "segmentation" / (n.id + ".json"), content, sha256_hex(content));
    novels_csv += csv_row({n.id, n.title, n.author, n.source_id.value_or(""), std::to_string(n.n_chapters()),
                           std::to_string(n.token_count())});
  }

  std::string summaries_csv =
      csv_row({"summary_id", "novel_id", "author_kind", "model", "prompt", "n_sentences", "tokens"});
  for (const auto& s : corpus.summaries) {
    summaries_csv += csv_row({s.id, s.novel_id, std::string(to_string(s.author_kind)), summary_model(s),
                              summary_prompt(s), std::to_string(s.n_sentences()), std::to_string(s.token_count())});
  }
  run.emit(config.output_root / "ingest" / "novels.csv", novels_csv, sha256_hex(novels_csv));
  run.emit(config.output_root / "ingest" / "summaries.csv", summaries_csv, sha256_hex(summaries_csv));
  log << "ingest: " << corpus.novels.size() << " novels, " << corpus.summaries.size() << " summaries\n";
  return run.finish();
}

// ---------------------------------------------------------------------------
// generate

Manifest cmd_generate(const RunConfig& config, const CommandOptions& options) {
  auto& log = log_of(options);
  std::vector<GeneratorConfig> gens;
  for (const auto& g : config.generators) {
    if (options.models.empty() || std::find(options.models.begin(), options.models.end(), g.model) != options.models.end()) {
      gens.push_back(g);
    }
  }
  for (const auto& m : options.models) {
    if (std::none_of(config.generators.begin(), config.generators.end(), [&](const auto& g) { return g.model == m; })) {
      throw Error(ErrorKind::config, "model '" + m + "' is not among the configured generators");
    }
  }
  const auto prompts = effective_prompts(config, options);
  // Generation only needs the novels; summaries are not loaded here.
  std::vector<Novel> novels;
  {
    const fs::path novels_dir = config.corpus_root / "novels";
    if (!fs::is_directory(novels_dir)) throw Error(ErrorKind::validation, novels_dir.string() + ": missing novels directory");
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(novels_dir)) {
      if (e.is_directory()) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) novels.push_back(load_novel(d));
  }

  const std::size_t planned = planned_generation_requests(novels.size(), gens.size(), prompts.size());
  if (options.dry_run) {
    log << "planned requests: " << planned << " (" << novels.size() << " novels x " << gens.size() << " models x "
        << prompts.size() << " prompts)\n";
    Manifest m;
    m.stage = "generate";
    m.config_hash = config.hash();
    m.run_id = m.config_hash.substr(0, 12);
    m.notices.push_back("dry run: " + std::to_string(planned) + " planned requests");
    return m;
  }

  std::optional<std::string> guidelines;
  if (std::any_of(prompts.begin(), prompts.end(), requires_guidelines)) {
    if (!config.guidelines_path) throw Error(ErrorKind::config, "Inst prompts need guidelines_path in the run config");
    guidelines = read_text_file(*config.guidelines_path);
  }

  StageRun run(config, "generate");
  const Transport transport(transport_options(config, options));

  struct Job {
    const Novel* novel;
    const GeneratorConfig* gen;
    PromptVariant prompt;
  };
  std::vector<Job> jobs;
  for (const auto& n : novels) {
    for (const auto& g : gens) {
      for (auto p : prompts) jobs.push_back({&n, &g, p});
    }
  }

  std::vector<std::string> truncated;
  std::mutex mu;
  auto misses = parallel_for(jobs.size(), effective_workers(config, options), [&](std::size_t i) {
    const Job& job = jobs[i];
    ChatRequest req;
    req.model = job.gen->model;
    req.prompt = render_generation_prompt(job.prompt, *job.novel,
                                          guidelines ? std::optional<std::string_view>(*guidelines) : std::nullopt);
    req.temperature = job.gen->temperature;
    req.max_output_tokens = job.gen->max_output_tokens;
    const std::string id = generated_summary_id(job.novel->id, job.gen->model, job.prompt);
    const fs::path out = config.output_root / "generated" / (id + ".json");
    const std::string input = sha256_hex(req.request_key() + "\n" + std::to_string(req.max_output_tokens));
    if (run.reuse(out, input)) return;
    ChatResponse resp;
    try {
      resp = transport.complete(req);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::fixture_miss) throw;
      throw Error(ErrorKind::fixture_miss, id + ": " + e.what());
    }
    if (resp.finish_reason != FinishReason::stop) {
      std::lock_guard lock(mu);
      truncated.push_back(id + " finished with " + std::string(to_string(resp.finish_reason)));
    }
    json j = {{"id", id},
              {"novel_id", job.novel->id},
              {"author_kind", "model"},
              {"model_name", job.gen->model},
              {"prompt_variant", to_string(job.prompt)},
              {"request_key", req.request_key()},
              {"finish_reason", to_string(resp.finish_reason)},
              {"raw_text", resp.text}};
    run.emit(out, dump_json(j), input);
  });
  std::sort(truncated.begin(), truncated.end());
  for (const auto& t : truncated) run.notice(t, log);

  const fs::path failures = config.output_root / "failures" / "generate.txt";
  if (!misses.empty()) {
    std::string body;
    for (const auto& m : misses) body += m + "\n";
    write_text_file(failures, body);
    run.finish();
    throw Error(ErrorKind::fixture_miss, fixture_miss_report(misses));
  }
  if (fs::exists(failures)) fs::remove(failures);
  log << "generate: " << jobs.size() << " summaries\n";
  return run.finish();
}

// ---------------------------------------------------------------------------
// align

Manifest cmd_align(const RunConfig& config, const CommandOptions& options) {
  auto& log = log_of(options);
  const AlignMethod method = options.method.value_or(AlignMethod::llm);
  if (method == AlignMethod::gold) throw Error(ErrorKind::config, "align: method must be llm, tfidf, or embedding");
  const Corpus corpus = load_run_corpus(config);
  const auto prompts = effective_prompts(config, options);

  std::optional<Transport> transport;
  if (method == AlignMethod::llm) {
    if (config.aligner.model.empty()) throw Error(ErrorKind::config, "align: aligner.model is not set");
    transport.emplace(transport_options(config, options));
  }
  std::optional<EmbeddingTable> table;
  std::string table_hash;
  if (method == AlignMethod::embedding) {
    if (!config.embeddings_path) throw Error(ErrorKind::config, "align: embedding method needs embeddings_path");
    table = load_embedding_table(*config.embeddings_path);
    table_hash = sha256_file(*config.embeddings_path);
  }

  std::vector<const Summary*> todo;
  for (const auto& s : corpus.summaries) {
    if (selected(s, options, prompts)) todo.push_back(&s);
  }
  std::map<std::string, std::string> novel_hashes;
  for (const auto& n : corpus.novels) novel_hashes[n.id] = novel_hash(n);

  StageRun run(config, "align-" + std::string(to_string(method)));
  const json aligner_json = config.to_json().at("aligner");
  std::atomic<int> skipped_chapters{0};
  auto misses = parallel_for(todo.size(), effective_workers(config, options), [&](std::size_t i) {
    const Summary& s = *todo[i];
    const Novel& n = *corpus.find_novel(s.novel_id);
    std::string input = std::string(to_string(method)) + "\n" + summary_hash(s) + "\n" + novel_hashes[n.id];
    if (method == AlignMethod::llm) input += "\n" + aligner_json.dump();
    if (method == AlignMethod::embedding) input += "\n" + table_hash;
    input = sha256_hex(input);
    const fs::path out = config.output_root / "graphs" / std::string(to_string(method)) / (s.id + ".json");
    if (run.reuse(out, input)) return;
    AlignmentGraph g;
    switch (method) {
      case AlignMethod::llm:
        try {
          g = align_llm(s, n, *transport, config.aligner);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::fixture_miss) throw;
          throw Error(ErrorKind::fixture_miss, s.id + ": " + e.what());
        }
        break;
      case AlignMethod::tfidf:
        g = align_tfidf(s, n);
        break;
      case AlignMethod::embedding:
        g = align_embedding(s, n, *table);
        break;
      case AlignMethod::gold:
        break;
    }
    for (const auto& d : g.diagnostics) {
      if (d.skipped) ++skipped_chapters;
    }
    run.emit(out, graph_to_json(g), input);
  });
  if (skipped_chapters > 0) {
    run.notice(std::to_string(skipped_chapters.load()) + " chapters skipped after unparseable responses", log);
  }
  if (!misses.empty()) {
    std::string body;
    for (const auto& m : misses) body += m + "\n";
    write_text_file(config.output_root / "failures" / "align.txt", body);
    run.finish();
    throw Error(ErrorKind::fixture_miss, fixture_miss_report(misses));
  }
  log << "align: " << todo.size() << " graphs (" << to_string(method) << ")\n";
  return run.finish();
}

// ---------------------------------------------------------------------------
// evaluate

namespace {

struct GoldSet {
  std::map<std::string, std::map<std::string, GoldAlignment>> by_summary;  // summary -> annotator -> gold
  std::vector<std::string> files;                                          // sorted, for hashing

  /// Adjudicated when present, else the single or alphabetically first annotator.
  const GoldAlignment& reference(const std::string& summary_id) const {
    const auto& m = by_summary.at(summary_id);
    auto it = m.find("adjudicated");
    return it != m.end() ? it->second : m.begin()->second;
  }
};

GoldSet load_gold_set(const fs::path& dir) {
  GoldSet set;
  if (!fs::is_directory(dir)) return set;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    GoldAlignment g = load_gold(f);
    const std::string who = g.annotator.empty() ? f.stem().string() : g.annotator;
    if (!set.by_summary[g.summary_id].emplace(who, std::move(g)).second) {
      throw Error(ErrorKind::validation, f.string() + ": second gold file for the same summary and annotator");
    }
    set.files.push_back(f.string());
  }
  return set;
}

std::string hash_files(const std::vector<fs::path>& files) {
  std::string all;
  for (const auto& f : files) all += f.filename().string() + ":" + sha256_file(f) + "\n";
  return sha256_hex(all);
}

std::vector<fs::path> json_files(const fs::path& dir, std::string_view suffix = ".json") {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() &&
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::fabs(v) < 0.005 ? 0.0 : v);
  return buf;
}

}  // namespace

Manifest cmd_evaluate(const RunConfig& config, const CommandOptions& options) {
  auto& log = log_of(options);
  StageRun run(config, "evaluate");
  const fs::path eval_dir = config.output_root / "evaluation";
  const GoldSet gold = config.gold_dir ? load_gold_set(*config.gold_dir) : GoldSet{};
  if (gold.by_summary.empty()) {
    const std::string where = config.gold_dir ? config.gold_dir->string() : std::string("(gold_dir not set)");
    run.notice("skipped: no gold alignments found in " + where, log);
    return run.finish();
  }

  const std::vector<AlignMethod> methods{AlignMethod::llm, AlignMethod::tfidf, AlignMethod::embedding};
  std::vector<fs::path> inputs;
  for (const auto& f : gold.files) inputs.push_back(f);
  for (auto m : methods) {
    auto files = json_files(config.output_root / "graphs" / std::string(to_string(m)));
    inputs.insert(inputs.end(), files.begin(), files.end());
  }
  const std::string input_hash = hash_files(inputs);

  std::string csv = csv_row({"method", "novel", "n_pairs", "gold_edges", "precision", "recall", "f1"});
  std::string md = "| Method | Pairs | P | R | F1 | Macro F1 |\n|---|---|---|---|---|---|\n";
  std::size_t gold_edges = 0;
  for (const auto& [id, by_annotator] : gold.by_summary) gold_edges += gold.reference(id).edges.size();

  // Rows per novel, then the pooled (micro) and macro rows.
  auto add_rows = [&](const std::string& name, const std::vector<std::pair<const GoldAlignment*, MatchCounts>>& pairs) {
    std::map<std::string, std::vector<MatchCounts>> by_novel;
    std::map<std::string, std::size_t> edges_by_novel;
    std::vector<MatchCounts> all;
    for (const auto& [g, c] : pairs) {
      by_novel[g->novel_id].push_back(c);
      edges_by_novel[g->novel_id] += g->edges.size();
      all.push_back(c);
    }
    auto row = [&](const std::string& novel, std::size_t n, std::size_t edges, const Prf& p) {
      csv += csv_row({name, novel, std::to_string(n), std::to_string(edges), format_number(p.precision),
                      format_number(p.recall), format_number(p.f1)});
    };
    for (const auto& [novel, counts] : by_novel) row(novel, counts.size(), edges_by_novel[novel], pooled_prf1(counts));
    std::size_t edges = 0;
    for (const auto& [novel, e] : edges_by_novel) edges += e;
    const Prf pooled = pooled_prf1(all);
    const Prf macro = macro_prf1(all);
    row("POOLED", all.size(), edges, pooled);
    row("MACRO", all.size(), edges, macro);
    md += "| " + name + " | " + std::to_string(all.size()) + " | " + two_decimals(pooled.precision) + " | " +
          two_decimals(pooled.recall) + " | " + two_decimals(pooled.f1) + " | " + two_decimals(macro.f1) + " |\n";
  };

  {
    std::vector<std::pair<const GoldAlignment*, MatchCounts>> pairs;
    for (const auto& [id, by_annotator] : gold.by_summary) {
      const auto& ref = gold.reference(id);
      pairs.emplace_back(&ref, match_counts(as_graph(ref), ref));
    }
    add_rows("gold", pairs);
  }
  for (auto m : methods) {
    const fs::path dir = config.output_root / "graphs" / std::string(to_string(m));
    if (!fs::is_directory(dir)) continue;
    std::vector<std::pair<const GoldAlignment*, MatchCounts>> pairs;
    std::size_t missing = 0;
    for (const auto& [id, by_annotator] : gold.by_summary) {
      const fs::path p = dir / (id + ".json");
      if (!fs::exists(p)) {
        ++missing;
        continue;
      }
      const auto& ref = gold.reference(id);
      pairs.emplace_back(&ref, match_counts(load_graph(p), ref));
    }
    if (missing) {
      run.notice(std::string(to_string(m)) + ": " + std::to_string(missing) + " gold summaries have no graph", log);
    }
    if (!pairs.empty()) add_rows(std::string(to_string(m)), pairs);
  }

  std::string kappa_csv = csv_row({"summary_id", "annotator_a", "annotator_b", "kappa", "degenerate"});
  for (const auto& [id, by_annotator] : gold.by_summary) {
    std::vector<const GoldAlignment*> raters;
    for (const auto& [who, g] : by_annotator) {
      if (who != "adjudicated") raters.push_back(&g);
    }
    for (std::size_t a = 0; a < raters.size(); ++a) {
      for (std::size_t b = a + 1; b < raters.size(); ++b) {
        const KappaResult k = cohen_kappa(*raters[a], *raters[b]);
        kappa_csv += csv_row({id, raters[a]->annotator, raters[b]->annotator, format_number(k.kappa),
                              k.degenerate ? "true" : "false"});
      }
    }
  }

  run.emit(eval_dir / "alignment.csv", csv, input_hash);
  run.emit(eval_dir / "alignment.md", md, input_hash);
  run.emit(eval_dir / "kappa.csv", kappa_csv, input_hash);
  log << "evaluate: " << gold.by_summary.size() << " gold summaries, " << gold_edges << " gold edges\n";
  return run.finish();
}

// ---------------------------------------------------------------------------
// metrics

namespace {

struct MetricDef {
  const char* name;
  const char* label;
  const char* table;
};

const std::vector<MetricDef>& metric_defs() {
  static const std::vector<MetricDef> defs{
      {"bleu", "BLEU", "Lexical"},
      {"tokens", "Tokens", "Syntactic"},
      {"sentences", "Sentences", "Syntactic"},
      {"dependency_distance", "Dep. distance", "Syntactic"},
      {"entities_per_100w", "Entities /100w", "Syntactic"},
      {"persons_per_100w", "Persons /100w", "Syntactic"},
      {"chapters_per_sentence", "Chapters/sentence", "Engagement"},
      {"sentences_per_chapter", "Sentences/chapter", "Engagement"},
      {"prop_chapters_skipped", "Chapters skipped", "Engagement"},
      {"prop_sentences_skipped", "Sentences skipped", "Engagement"},
      {"linearity", "Linearity", "Order"},
      {"skew", "Skew", "Order"},
      {"avg_match", "Avg. match", "Order"},
  };
  return defs;
}

using MetricRow = std::map<std::string, std::optional<double>>;

void render_pgm_rows(const HeatmapMatrix& m, int cw, int ch, std::string& out) {
  const int width = m.n_bins * cw;
  const int height = static_cast<int>(m.rows.size()) * ch;
  out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (const auto& row : m.rows) {
    const double max = row.empty() ? 0.0 : *std::max_element(row.begin(), row.end());
    std::string line;
    for (double v : row) {
      const long shade = max > 0 ? 255 - std::lround(255.0 * v / max) : 255;
      line.append(static_cast<std::size_t>(cw), static_cast<char>(static_cast<unsigned char>(shade)));
    }
    for (int r = 0; r < ch; ++r) out += line;
  }
}

}  // namespace

std::string heatmap_pgm(const HeatmapMatrix& matrix, int cw, int ch) {
  if (cw < 1 || ch < 1) throw Error(ErrorKind::validation, "heatmap cell size must be positive");
  for (const auto& row : matrix.rows) {
    if (static_cast<int>(row.size()) != matrix.n_bins) throw Error(ErrorKind::validation, "heatmap row width mismatch");
  }
  std::string out;
  render_pgm_rows(matrix, cw, ch, out);
  return out;
}

void render_heatmap(const HeatmapMatrix& matrix, const fs::path& path, int cw, int ch) {
  write_text_file(path, heatmap_pgm(matrix, cw, ch));
}

Manifest cmd_metrics(const RunConfig& config, const CommandOptions& options) {
  auto& log = log_of(options);
  StageRun run(config, "metrics");
  const Corpus corpus = load_run_corpus(config);
  const auto prompts = effective_prompts(config, options);
  const AlignMethod method = options.method.value_or(*parse_align_method(config.metrics_method));
  const int bins = options.bins.value_or(config.heatmap_bins);
  const double alpha = options.alpha.value_or(config.alpha);
  if (bins < 1) throw Error(ErrorKind::config, "bins must be >= 1");
  if (!(alpha > 0 && alpha < 1)) throw Error(ErrorKind::config, "alpha must be in (0, 1)");

  std::vector<const Summary*> summaries;
  for (const auto& s : corpus.summaries) {
    if (selected(s, options, prompts)) summaries.push_back(&s);
  }

  // Graphs for the chosen method.
  GoldSet gold;
  if (method == AlignMethod::gold && config.gold_dir) gold = load_gold_set(*config.gold_dir);
  const fs::path graph_dir = config.output_root / "graphs" / std::string(to_string(method));
  std::map<std::string, AlignmentGraph> graphs;
  std::vector<fs::path> inputs;
  for (const auto* s : summaries) {
    if (method == AlignMethod::gold) {
      if (gold.by_summary.count(s->id)) graphs.emplace(s->id, as_graph(gold.reference(s->id)));
    } else {
      const fs::path p = graph_dir / (s->id + ".json");
      if (fs::exists(p)) {
        graphs.emplace(s->id, load_graph(p));
        inputs.push_back(p);
      }
    }
  }
  std::size_t missing_graphs = summaries.size() - graphs.size();
  if (missing_graphs) {
    run.notice(std::to_string(missing_graphs) + " summaries have no " + std::string(to_string(method)) +
                   " graph; engagement columns left empty",
               log);
  }

  std::map<std::string, std::vector<AnnotatedSentence>> annotations;
  if (config.annotations_dir) {
    for (const auto* s : summaries) {
      const fs::path p = *config.annotations_dir / (s->id + ".ann.json");
      if (fs::exists(p)) {
        annotations.emplace(s->id, load_annotations(p));
        inputs.push_back(p);
      }
    }
  }

  std::string input_blob = hash_files(inputs) + "\n" + std::to_string(bins) + "\n" + format_number(alpha) + "\n" +
                           std::string(to_string(method));
  for (const auto* s : summaries) input_blob += "\n" + summary_hash(*s);
  for (const auto& f : gold.files) input_blob += "\n" + sha256_file(f);
  const std::string input_hash = sha256_hex(input_blob);

  // Human reference per novel: first human summary by id.
  std::map<std::string, const Summary*> human_of;
  for (const auto* s : summaries) {
    if (s->author_kind == AuthorKind::human) human_of.emplace(s->novel_id, s);
  }
  std::map<std::string, NgramProfile> profiles;
  for (const auto& [novel, s] : human_of) profiles.emplace(s->id, NgramProfile(s->raw_text));

  std::map<std::string, MetricRow> rows;  // summary id -> metric -> value
  std::string eng_csv = csv_row({"summary_id", "novel_id", "author_kind", "model", "prompt", "n_sentences",
                                 "n_chapters", "n_edges", "chapters_per_sentence", "sentences_per_chapter",
                                 "prop_chapters_skipped", "prop_sentences_skipped", "linearity", "skew", "avg_match"});
  std::string style_csv = csv_row({"summary_id", "novel_id", "author_kind", "model", "prompt", "tokens", "sentences",
                                   "dependency_distance", "entities_per_100w", "persons_per_100w", "bleu_vs_human"});
  for (const auto* s : summaries) {
    MetricRow& row = rows[s->id];
    const std::vector<std::string> key{s->id, s->novel_id, std::string(to_string(s->author_kind)), summary_model(*s),
                                       summary_prompt(*s)};
    auto g = graphs.find(s->id);
    std::vector<std::string> eng = key;
    if (g != graphs.end()) {
      const EngagementMetrics e = compute_engagement(g->second);
      row["chapters_per_sentence"] = e.chapters_per_sentence;
      row["sentences_per_chapter"] = e.sentences_per_chapter;
      row["prop_chapters_skipped"] = e.prop_chapters_skipped;
      row["prop_sentences_skipped"] = e.prop_sentences_skipped;
      row["linearity"] = e.linearity;
      row["skew"] = e.skew;
      row["avg_match"] = e.avg_match;
      eng.insert(eng.end(), {std::to_string(g->second.n_sentences()), std::to_string(g->second.n_chapters()),
                             std::to_string(g->second.size())});
    } else {
      eng.insert(eng.end(), {std::to_string(s->n_sentences()), "", ""});
    }
    for (const char* m : {"chapters_per_sentence", "sentences_per_chapter", "prop_chapters_skipped",
                          "prop_sentences_skipped", "linearity", "skew", "avg_match"}) {
      eng.push_back(format_number(row[m]));
    }
    eng_csv += csv_row(eng);

    row["tokens"] = static_cast<double>(s->token_count());
    row["sentences"] = static_cast<double>(s->n_sentences());
    auto ann = annotations.find(s->id);
    if (ann != annotations.end()) {
      row["dependency_distance"] = dependency_distance(ann->second);
      const EntityDensity d = entity_density(ann->second);
      row["entities_per_100w"] = d.entities_per_100w;
      row["persons_per_100w"] = d.persons_per_100w;
    } else {
      row["dependency_distance"] = row["entities_per_100w"] = row["persons_per_100w"] = std::nullopt;
    }
    row["bleu"] = std::nullopt;
    if (s->author_kind == AuthorKind::model) {
      auto h = human_of.find(s->novel_id);
      if (h != human_of.end()) row["bleu"] = bleu(NgramProfile(s->raw_text), profiles.at(h->second->id));
    }
    std::vector<std::string> st = key;
    st.push_back(std::to_string(s->token_count()));
    st.push_back(std::to_string(s->n_sentences()));
    for (const char* m : {"dependency_distance", "entities_per_100w", "persons_per_100w", "bleu"}) {
      st.push_back(format_number(row[m]));
    }
    style_csv += csv_row(st);
  }

  // Cross-novel human BLEU baseline.
  std::vector<double> cross;
  for (const auto& [na, a] : human_of) {
    for (const auto& [nb, b] : human_of) {
      if (na != nb) cross.push_back(bleu(profiles.at(a->id), profiles.at(b->id)));
    }
  }
  std::string baseline_csv = csv_row({"n_pairs", "mean_bleu", "se"});
  std::optional<MeanSe> baseline;
  if (!cross.empty()) {
    baseline = mean_se(cross);
    baseline_csv += csv_row({std::to_string(cross.size()), format_number(baseline->mean), format_number(baseline->se)});
  } else {
    baseline_csv += csv_row({"0", "", ""});
  }

  // Aggregates.
  std::vector<std::string> models;
  for (const auto& g : config.generators) models.push_back(g.model);
  for (const auto* s : summaries) {
    if (s->model_name && std::find(models.begin(), models.end(), *s->model_name) == models.end()) {
      models.push_back(*s->model_name);
    }
  }
  models.erase(std::remove_if(models.begin(), models.end(),
                              [&](const std::string& m) {
                                return std::none_of(summaries.begin(), summaries.end(),
                                                    [&](const Summary* s) { return s->model_name == m; });
                              }),
               models.end());
  std::vector<std::string> prompt_names;
  for (auto p : prompts) {
    if (std::any_of(summaries.begin(), summaries.end(), [&](const Summary* s) { return s->prompt_variant == p; })) {
      prompt_names.emplace_back(to_string(p));
    }
  }

  std::string agg_csv = csv_row({"metric", "group", "mean", "se", "n_books"});
  std::map<std::string, std::map<std::string, AggregateCell>> cells;  // metric -> group -> cell
  std::vector<std::string> groups;
  std::vector<ComparisonReport> comparisons;
  for (const auto& def : metric_defs()) {
    std::vector<MetricRecord> records;
    for (const auto* s : summaries) {
      const auto& v = rows[s->id][def.name];
      if (!v) continue;
      records.push_back({s->novel_id, s->author_kind == AuthorKind::human, summary_model(*s), summary_prompt(*s), *v});
    }
    const AggregateResult agg = aggregate(records, def.name, models, prompt_names);
    for (const auto& c : agg.cells) {
      agg_csv += csv_row({c.metric_name, c.group, format_number(c.mean), format_number(c.se), std::to_string(c.n_books)});
      cells[def.name][c.group] = c;
      if (std::find(groups.begin(), groups.end(), c.group) == groups.end()) groups.push_back(c.group);
    }

    std::vector<double> human_values;
    for (const auto& r : records) {
      if (r.human) human_values.push_back(r.value);
    }
    if (human_values.empty()) continue;
    for (const auto& m : models) {
      for (const auto& p : prompt_names) {
        std::vector<double> values;
        for (const auto& r : records) {
          if (!r.human && r.model == m && r.prompt == p) values.push_back(r.value);
        }
        if (values.empty()) continue;
        comparisons.push_back(compare_samples(def.name, "Human", human_values, m + " / " + p, values));
      }
    }
  }
  // Group order: Human, models, then prompts.
  std::vector<std::string> ordered{"Human"};
  ordered.insert(ordered.end(), models.begin(), models.end());
  for (const auto& p : prompt_names) ordered.push_back("Prompt: " + p);

  if (!comparisons.empty()) apply_bh(comparisons, alpha);
  std::string cmp_csv = csv_row({"metric", "group_a", "group_b", "ks_distance", "p_value", "significant", "n_a", "n_b"});
  for (const auto& c : comparisons) {
    char p[32];
    std::snprintf(p, sizeof p, "%.6e", c.p_value);
    cmp_csv += csv_row({c.metric_name, c.group_a, c.group_b, format_number(c.ks_distance), p,
                        c.significant ? "true" : "false", std::to_string(c.n_a), std::to_string(c.n_b)});
  }

  std::string md;
  for (const char* table : {"Lexical", "Syntactic", "Engagement", "Order"}) {
    std::vector<const MetricDef*> defs;
    for (const auto& d : metric_defs()) {
      if (std::string_view(d.table) == table) defs.push_back(&d);
    }
    md += "### " + std::string(table) + "\n\n| Group |";
    for (const auto* d : defs) md += " " + std::string(d->label) + " |";
    md += "\n|---|";
    for (std::size_t i = 0; i < defs.size(); ++i) md += "---|";
    md += "\n";
    if (std::string_view(table) == "Lexical" && baseline) {
      md += "| Baseline | " + format_mean_se(baseline->mean, baseline->se, 2) + " |\n";
    }
    for (const auto& group : ordered) {
      bool any = false;
      std::string line = "| " + group + " |";
      for (const auto* d : defs) {
        auto mit = cells.find(d->name);
        if (mit != cells.end() && mit->second.count(group)) {
          const auto& c = mit->second.at(group);
          line += " " + format_mean_se(c.mean, c.se, 2) + " |";
          any = true;
        } else {
          line += " |";
        }
      }
      if (any) md += line + "\n";
    }
    md += "\n";
  }

  // Heatmaps: one for humans, one per model.
  std::vector<std::pair<std::string, std::vector<AlignmentGraph>>> heat_groups;
  {
    std::vector<AlignmentGraph> hs;
    for (const auto* s : summaries) {
      if (s->author_kind == AuthorKind::human && graphs.count(s->id)) hs.push_back(graphs.at(s->id));
    }
    if (!hs.empty()) heat_groups.emplace_back("human", std::move(hs));
    for (const auto& m : models) {
      std::vector<AlignmentGraph> ms;
      for (const auto* s : summaries) {
        if (s->model_name == m && graphs.count(s->id)) ms.push_back(graphs.at(s->id));
      }
      if (!ms.empty()) heat_groups.emplace_back(m, std::move(ms));
    }
  }

  const fs::path mdir = config.output_root / "metrics";
  run.emit(mdir / "engagement.csv", eng_csv, input_hash);
  run.emit(mdir / "style.csv", style_csv, input_hash);
  run.emit(mdir / "bleu_baseline.csv", baseline_csv, input_hash);
  run.emit(mdir / "aggregates.csv", agg_csv, input_hash);
  run.emit(mdir / "aggregates.md", md, input_hash);
  run.emit(mdir / "comparisons.csv", cmp_csv, input_hash);
  for (const auto& [name, gs] : heat_groups) {
    const HeatmapMatrix hm = heatmap(gs, bins);
    std::vector<std::string> header{"summary_id"};
    for (int b = 1; b <= bins; ++b) header.push_back("bin_" + std::to_string(b));
    std::string csv = csv_row(header);
    for (std::size_t r = 0; r < hm.rows.size(); ++r) {
      std::vector<std::string> f{gs[r].summary_id()};
      for (double v : hm.rows[r]) f.push_back(format_number(v));
      csv += csv_row(f);
    }
    std::vector<std::string> mean{"mean"};
    for (double v : hm.mean_row()) mean.push_back(format_number(v));
    csv += csv_row(mean);
    for (const auto& e : hm.empty_books) run.notice("heatmap " + name + ": " + e + " has no edges", log);
    const std::string slug = slugify(name);
    run.emit(mdir / "heatmaps" / (slug + ".csv"), csv, input_hash);
    run.emit(mdir / "heatmaps" / (slug + ".pgm"), heatmap_pgm(hm), input_hash);
  }
  log << "metrics: " << summaries.size() << " summaries, " << comparisons.size() << " KS comparisons\n";
  return run.finish();
}

// ---------------------------------------------------------------------------
// report

Manifest cmd_report(const RunConfig& config, const CommandOptions& options) {
  auto& log = log_of(options);
  StageRun run(config, "report");
  const fs::path eval_md = config.output_root / "evaluation" / "alignment.md";
  const fs::path agg_md = config.output_root / "metrics" / "aggregates.md";
  const fs::path cmp_csv = config.output_root / "metrics" / "comparisons.csv";
  std::string report = "# Engagement report\n\n";
  std::vector<fs::path> inputs;
  if (fs::exists(eval_md)) {
    report += "## Alignment\n\n" + read_text_file(eval_md) + "\n";
    inputs.push_back(eval_md);
  } else {
    report += "## Alignment\n\nNo evaluation output.\n\n";
  }
  if (fs::exists(agg_md)) {
    report += "## Metrics\n\n" + read_text_file(agg_md);
    inputs.push_back(agg_md);
  } else {
    report += "## Metrics\n\nNo metrics output.\n\n";
  }
  if (fs::exists(cmp_csv)) {
    inputs.push_back(cmp_csv);
    std::istringstream in(read_text_file(cmp_csv));
    std::string line;
    std::getline(in, line);
    std::size_t total = 0, significant = 0;
    while (std::getline(in, line)) {
      ++total;
      if (line.find(",true,") != std::string::npos) ++significant;
    }
    report += "## Comparisons\n\n" + std::to_string(significant) + " of " + std::to_string(total) +
              " human-vs-model KS tests significant after Benjamini-Hochberg at alpha " +
              format_number(config.alpha) + ".\n";
  }
  run.emit(config.output_root / "report.md", report, hash_files(inputs));
  log << "report: " << (config.output_root / "report.md").string() << "\n";
  return run.finish();
}

}  // namespace ea
