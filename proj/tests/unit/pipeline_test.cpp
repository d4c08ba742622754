#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ea/error.hpp"
#include "ea/io.hpp"
#include "ea/pipeline.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using ea::test::TempDir;
using nlohmann::json;

namespace {

ea::ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ea::Error& e) {
    return e.kind();
  }
  FAIL("expected ea::Error");
  return ea::ErrorKind::validation;
}

json minimal_config() { return {{"corpus_root", "corpus"}, {"output_root", "out"}}; }

}  // namespace

TEST_CASE("run config parsing") {
  const auto c = ea::parse_run_config(minimal_config(), "/base");
  CHECK(c.corpus_root == fs::path("/base/corpus"));
  CHECK(c.alpha == 0.01);
  CHECK(c.heatmap_bins == 20);
  CHECK(c.prompts.size() == 4);
  CHECK(c.metrics_method == "llm");

  auto with_gen = minimal_config();
  with_gen["generators"] = json::array({{{"model", "m"}}});
  CHECK(ea::parse_run_config(with_gen, "/b").generators.at(0).temperature == 0.7);

  CHECK(ea::parse_run_config(minimal_config(), "/a").hash() == ea::parse_run_config(minimal_config(), "/a").hash());
  auto other = minimal_config();
  other["alpha"] = 0.05;
  CHECK(ea::parse_run_config(other, "/a").hash() != ea::parse_run_config(minimal_config(), "/a").hash());
}

TEST_CASE("run config errors") {
  const std::vector<std::pair<std::string, json>> bad = {
      {"/alpha", 1.5},          {"/alpha", 0},           {"/heatmap_bins", 0}, {"/workers", 0},
      {"/typo_key", 1},         {"/metrics_method", "x"}, {"/prompts", json::array({"Poem"})},
      {"/transport", {{"mode", "carrier-pigeon"}}},       {"/aligner", {{"unknown", 1}}},
      {"/alpha", "high"},
  };
  for (const auto& [ptr, value] : bad) {
    CAPTURE(ptr);
    auto j = minimal_config();
    j[json::json_pointer(ptr)] = value;
    CHECK(kind_of([&] { ea::parse_run_config(j, "/b"); }) == ea::ErrorKind::config);
  }
  CHECK(kind_of([] { ea::parse_run_config({{"output_root", "o"}}, "/b"); }) == ea::ErrorKind::config);
}

TEST_CASE("helpers") {
  CHECK(ea::slugify("gpt-oss-120b") == "gpt-oss-120b");
  CHECK(ea::slugify("meta/llama 3.1:8b") == "meta-llama-3.1-8b");
  CHECK(ea::generated_summary_id("kim", "a/b", ea::PromptVariant::text_inst) == "kim__a-b__TextInst");
  CHECK(ea::csv_field("plain") == "plain");
  CHECK(ea::csv_field("a,b") == "\"a,b\"");
  CHECK(ea::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(ea::format_number(std::nullopt) == "");
  CHECK(ea::format_number(1.0 / 3) == "0.333333");
  CHECK(ea::format_number(-1e-9) == "0.000000");
  CHECK(ea::planned_generation_requests(150, 9, 4) == 5400);
}

TEST_CASE("heatmap PGM") {
  ea::HeatmapMatrix m;
  m.n_bins = 5;
  m.book_ids = {"a", "b", "c"};
  m.rows = {{0.5, 0.25, 0.25, 0, 0}, {0, 0, 0, 0, 0}, {0.2, 0.2, 0.2, 0.2, 0.2}};
  const auto pgm = ea::heatmap_pgm(m, 2, 3);

  // Oracle: 255 - round(255 * v / row max), so 0.25 of a 0.5 maximum is
  // 255 - round(127.5) = 127; an all-zero row stays white.
  std::string expect = "P5\n10 9\n255\n";
  const std::vector<std::vector<int>> shades = {{0, 127, 127, 255, 255}, {255, 255, 255, 255, 255}, {0, 0, 0, 0, 0}};
  for (const auto& row : shades) {
    std::string line;
    for (int s : row) line.append(2, static_cast<char>(s));
    for (int r = 0; r < 3; ++r) expect += line;
  }
  CHECK(pgm == expect);
  CHECK(ea::sha256_hex(pgm) == "666ee92ce828d23c0f03484411ebb43db9a263b149c84392d8d322c3d1f08649");
  CHECK(ea::heatmap_pgm(m).size() == std::string("P5\n40 24\n255\n").size() + 40 * 24);
  m.rows[0].pop_back();
  CHECK_THROWS_AS(ea::heatmap_pgm(m), ea::Error);
}

TEST_CASE("dry run counts the full generation grid") {
  TempDir tmp;
  for (int i = 1; i <= 150; ++i) {
    const fs::path d = tmp / ("corpus/novels/n" + std::to_string(1000 + i));
    ea::write_text_file(d / "meta.json", R"({"title": "T", "author": "A"})");
    ea::write_text_file(d / "chapters/001.txt", "CHAPTER I\nText.\n");
  }
  auto j = minimal_config();
  j["generators"] = json::array();
  for (int m = 1; m <= 9; ++m) j["generators"].push_back({{"model", "model-" + std::to_string(m)}});
  const auto config = ea::parse_run_config(j, tmp.path());
  std::ostringstream log;
  ea::CommandOptions opts;
  opts.dry_run = true;
  opts.log = &log;
  const auto m = ea::cmd_generate(config, opts);
  CHECK(log.str().find("planned requests: 5400") != std::string::npos);
  REQUIRE(m.notices.size() == 1);
  CHECK(m.notices[0].find("5400") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "out/generated"));
}

TEST_CASE("replay pipeline reproduces the golden outputs") {
  TempDir tmp;
  const auto run = ea::test::run_replay_pipeline(tmp.path());
  CHECK(run.seconds < 60);
  const auto got = ea::test::output_hashes(run.output);
  const auto want = ea::test::golden_replay_hashes();
  for (const auto& [path, hash] : want) {
    CAPTURE(path);
    REQUIRE(got.count(path) == 1);
    CHECK(got.at(path) == hash);
  }
  CHECK(got.size() == want.size());

  const std::string eval = ea::read_text_file(run.output / "evaluation/alignment.csv");
  CHECK(eval.find("llm,POOLED,") != std::string::npos);

  // Every stage is current on a second pass.
  const auto config = ea::load_run_config(run.root / "run.json");
  std::ostringstream log;
  ea::CommandOptions opts;
  opts.log = &log;
  CHECK(ea::cmd_align(config, opts).reused);
  CHECK(ea::cmd_metrics(config, opts).reused);
  CHECK(ea::test::output_hashes(run.output) == got);
}

TEST_CASE("tfidf alignment is deterministic across reruns") {
  TempDir tmp;
  const auto root = ea::test::copy_fixture("carmilla", tmp.path());
  const auto config = ea::load_run_config(root / "run.json");
  std::ostringstream log;
  ea::CommandOptions opts;
  opts.log = &log;
  opts.method = ea::AlignMethod::tfidf;
  ea::cmd_ingest(config, opts);
  ea::cmd_align(config, opts);
  const auto first = ea::test::output_hashes(config.output_root / "graphs");
  fs::remove_all(config.output_root / "graphs");
  fs::remove_all(config.output_root / "cache");
  ea::cmd_align(config, opts);
  CHECK(ea::test::output_hashes(config.output_root / "graphs") == first);
  CHECK(!first.empty());
}

TEST_CASE("a missing fixture stops alignment with a fixture miss") {
  TempDir tmp;
  const auto root = ea::test::copy_fixture("carmilla", tmp.path());
  std::vector<fs::path> fixtures;
  for (const auto& e : fs::directory_iterator(root / "llm")) fixtures.push_back(e.path());
  std::sort(fixtures.begin(), fixtures.end());
  // Drop one alignment fixture (generation requests use the Summarize prompts).
  for (const auto& f : fixtures) {
    if (ea::read_text_file(f).find("SUMMARY SENTENCES") != std::string::npos) {
      fs::remove(f);
      break;
    }
  }
  const auto config = ea::load_run_config(root / "run.json");
  std::ostringstream log;
  ea::CommandOptions opts;
  opts.log = &log;
  ea::cmd_ingest(config, opts);
  ea::cmd_generate(config, opts);
  CHECK(kind_of([&] { ea::cmd_align(config, opts); }) == ea::ErrorKind::fixture_miss);
  CHECK(fs::exists(config.output_root / "failures/align.txt"));
}

#ifdef EA_CLI_PATH

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + EA_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("CLI exit codes") {
  TempDir tmp;
  const auto root = ea::test::copy_fixture("carmilla", tmp.path());
  const std::string cfg = "--config \"" + (root / "run.json").string() + "\"";
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("ingest") == 1);
  CHECK(run_cli("align " + cfg + " --method psychic") == 1);
  CHECK(run_cli("metrics " + cfg + " --alpha 2") == 1);
  CHECK(run_cli("ingest " + cfg) == 0);
  CHECK(run_cli("generate " + cfg + " --dry-run") == 0);
}

TEST_CASE("CLI reports fixture misses with exit code 2") {
  TempDir tmp;
  const auto root = ea::test::copy_fixture("carmilla", tmp.path());
  fs::remove_all(root / "llm");
  fs::create_directories(root / "llm");
  const std::string cfg = "--config \"" + (root / "run.json").string() + "\"";
  CHECK(run_cli("ingest " + cfg) == 0);
  CHECK(run_cli("generate " + cfg) == 2);
  CHECK(run_cli("generate " + cfg + " --live") == 1);
}

#endif
