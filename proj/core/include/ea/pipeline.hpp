#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ea/aligner.hpp"
#include "ea/corpus.hpp"
#include "ea/engagement.hpp"
#include "ea/graph.hpp"
#include "ea/llm_gateway.hpp"

namespace ea {

struct GeneratorConfig {
  std::string model;
  double temperature = 0.7;
  int max_output_tokens = 4096;
};

/// JSON run configuration. Relative paths resolve against the config
/// file's directory.
struct RunConfig {
  std::filesystem::path corpus_root;
  std::filesystem::path output_root;
  AlignerConfig aligner;
  std::vector<GeneratorConfig> generators;
  TransportOptions transport;
  std::vector<PromptVariant> prompts{PromptVariant::text, PromptVariant::text_inst, PromptVariant::title,
                                     PromptVariant::title_inst};
  double alpha = 0.01;
  int heatmap_bins = 20;
  std::uint64_t seed = 0;
  int workers = 1;
  std::optional<std::filesystem::path> guidelines_path;
  std::optional<std::filesystem::path> embeddings_path;
  std::optional<std::filesystem::path> gold_dir;
  std::optional<std::filesystem::path> annotations_dir;
  std::vector<std::filesystem::path> summary_dirs;  // extra summary sources
  std::string metrics_method = "llm";               // which graphs feed engagement metrics

  /// Canonical JSON (paths as given, defaults filled in).
  nlohmann::json to_json() const;
  /// sha256 of the canonical JSON.
  std::string hash() const;
};

/// Throws ErrorKind::config on missing keys, bad values, or alpha outside (0, 1).
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

struct FileHash {
  std::string path;  // relative to output_root, or to corpus_root for inputs
  std::string sha256;
};

struct Manifest {
  std::string stage;
  std::string run_id;  // first 12 hex digits of config_hash
  std::string config_hash;
  std::vector<FileHash> input_files;
  std::vector<FileHash> produced_files;
  std::map<std::string, double> timings;  // seconds
  std::vector<std::string> notices;
  bool reused = false;  // every output was already current

  nlohmann::json to_json() const;
};

Manifest load_manifest(const std::filesystem::path& path);

/// Per-invocation overrides on top of RunConfig.
struct CommandOptions {
  std::optional<AlignMethod> method;
  std::vector<std::string> models;  // empty: all configured generators
  std::optional<std::vector<PromptVariant>> prompts;
  std::optional<TransportMode> transport_mode;
  std::optional<int> workers;
  std::optional<int> bins;
  std::optional<double> alpha;
  bool dry_run = false;
  std::ostream* log = nullptr;
};

/// Segments `source.txt` where present (materializing `chapters/` when it
/// is absent, verifying it otherwise), loads and validates the corpus, and
/// writes segmentation manifests plus novel/summary inventories.
Manifest cmd_ingest(const RunConfig& config, const CommandOptions& options = {});

/// Renders every (generator, novel, prompt) request and stores the replies
/// as summary files. Dry runs only count the plan. Fixture misses are
/// collected and raised together at the end.
Manifest cmd_generate(const RunConfig& config, const CommandOptions& options = {});

/// One graph per summary under `graphs/<method>/`.
Manifest cmd_align(const RunConfig& config, const CommandOptions& options = {});

/// Precision/recall/F1 of every available graph method against gold, and
/// pairwise kappa between annotators.
Manifest cmd_evaluate(const RunConfig& config, const CommandOptions& options = {});

/// Engagement and style metrics, aggregates, KS comparisons, heatmaps.
Manifest cmd_metrics(const RunConfig& config, const CommandOptions& options = {});

/// Collects the Markdown tables into `report.md`.
Manifest cmd_report(const RunConfig& config, const CommandOptions& options = {});

/// Number of generation requests for the configured grid.
std::size_t planned_generation_requests(std::size_t n_novels, std::size_t n_models, std::size_t n_prompts);

/// Binary PGM (P5). Each row is scaled by its own maximum: 0 is white,
/// the row maximum black. Rows with no mass stay white.
void render_heatmap(const HeatmapMatrix& matrix, const std::filesystem::path& path, int cell_width = 8,
                    int cell_height = 8);
std::string heatmap_pgm(const HeatmapMatrix& matrix, int cell_width = 8, int cell_height = 8);

/// RFC 4180 quoting when the field contains a comma, quote, or newline.
std::string csv_field(const std::string& field);
/// Fixed 6-decimal rendering; empty string for a missing value.
std::string format_number(std::optional<double> value);

/// File-safe slug: runs of characters outside [A-Za-z0-9._-] become '-'.
std::string slugify(std::string_view s);

std::string generated_summary_id(std::string_view novel_id, std::string_view model, PromptVariant variant);

}  // namespace ea
