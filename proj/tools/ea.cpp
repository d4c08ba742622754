// ea: corpus-to-report command line.
//
//   ea ingest   --config run.json
//   ea align    --config run.json --method tfidf --workers 4
//   ea generate --config run.json --dry-run
//   ea metrics  --config run.json --bins 20 --alpha 0.01

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ea/error.hpp"
#include "ea/pipeline.hpp"

namespace {

std::vector<ea::PromptVariant> parse_prompts(const std::vector<std::string>& names) {
  std::vector<ea::PromptVariant> out;
  for (const auto& n : names) {
    auto v = ea::parse_prompt_variant(n);
    if (!v) throw ea::Error(ea::ErrorKind::validation, "unknown prompt variant '" + n + "'");
    out.push_back(*v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Summary-to-novel alignment and engagement metrics"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string method;
  std::vector<std::string> models;
  std::vector<std::string> prompts;
  bool replay = false, record = false, live = false;
  int workers = 0, bins = 0;
  double alpha = 0;
  bool dry_run = false;

  app.add_option("--config", config_path, "Run configuration JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--method", method, "Alignment method")->check(CLI::IsMember({"llm", "tfidf", "embedding", "gold"}));
  app.add_option("--models", models, "Restrict to these generator models")->delimiter(',');
  app.add_option("--prompts", prompts, "Restrict to these prompt variants")->delimiter(',');
  auto* f_replay = app.add_flag("--replay", replay, "Answer model calls from fixtures");
  auto* f_record = app.add_flag("--record", record, "Call the endpoint and store fixtures");
  auto* f_live = app.add_flag("--live", live, "Call the endpoint without storing");
  f_replay->excludes(f_record)->excludes(f_live);
  f_record->excludes(f_live);
  app.add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
  app.add_option("--bins", bins, "Heatmap bins")->check(CLI::PositiveNumber);
  app.add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  app.add_flag("--dry-run", dry_run, "Print the planned requests and stop");

  auto* ingest = app.add_subcommand("ingest", "Segment and validate the corpus");
  auto* generate = app.add_subcommand("generate", "Generate model summaries");
  auto* align = app.add_subcommand("align", "Align summary sentences to chapters");
  auto* evaluate = app.add_subcommand("evaluate", "Score alignments against gold");
  auto* metrics = app.add_subcommand("metrics", "Engagement and style metrics, statistics, heatmaps");
  auto* report = app.add_subcommand("report", "Collect tables into report.md");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ea::RunConfig config = ea::load_run_config(config_path);
    ea::CommandOptions opts;
    opts.log = &std::cerr;
    if (!method.empty()) opts.method = ea::parse_align_method(method);
    opts.models = models;
    if (!prompts.empty()) opts.prompts = parse_prompts(prompts);
    if (replay) opts.transport_mode = ea::TransportMode::replay;
    if (record) opts.transport_mode = ea::TransportMode::record;
    if (live) opts.transport_mode = ea::TransportMode::live;
    if (workers > 0) opts.workers = workers;
    if (bins > 0) opts.bins = bins;
    if (alpha > 0) opts.alpha = alpha;
    opts.dry_run = dry_run;

    ea::Manifest m;
    if (ingest->parsed()) {
      m = ea::cmd_ingest(config, opts);
    } else if (generate->parsed()) {
      m = ea::cmd_generate(config, opts);
    } else if (align->parsed()) {
      m = ea::cmd_align(config, opts);
    } else if (evaluate->parsed()) {
      m = ea::cmd_evaluate(config, opts);
    } else if (metrics->parsed()) {
      m = ea::cmd_metrics(config, opts);
    } else if (report->parsed()) {
      m = ea::cmd_report(config, opts);
    }
    if (!dry_run) {
      std::cout << m.stage << " " << m.run_id << ": " << m.produced_files.size() << " files"
                << (m.reused ? " (up to date)" : "") << "\n";
    }
    return 0;
  } catch (const ea::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ea::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
