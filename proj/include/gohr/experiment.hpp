#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gohr/analysis.hpp"
#include "gohr/board_gen.hpp"
#include "gohr/dqn.hpp"
#include "gohr/rule.hpp"

namespace gohr {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kManifestFormat = "gohr-manifest-1";

// Configuration or validation problem; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RuleSource {
  std::string name;  // [a-z0-9_-]+, used in paths and tables
  std::string text;
};

struct ExperimentConfig {
  std::vector<RuleSource> rules;
  FeatureSet features = FeatureSet::defaults();
  GenParams gen;
  std::optional<std::string> boards_text;  // fixed curriculum, cycled
  dqn::Hyperparams agent;                  // trials, episodes, horizon live here
  std::uint64_t seed = 1;
  analysis::BootstrapOptions bootstrap;
  bool transcripts = true;
  bool save_weights = false;  // weights/<rule>/trial_NNN.theta
  int jobs = 1;
  std::filesystem::path output = "gohr-run";

  // Reads a JSON config. Relative rule and board paths resolve against
  // `base_dir`. Throws ConfigError.
  static ExperimentConfig from_json_text(const std::string& text,
                                         const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Reads the configuration recorded in a manifest.
  static ExperimentConfig from_manifest(const std::filesystem::path& manifest_path);

  // Self-contained JSON (rule and board texts inline, no output path or job
  // count), the form recorded in manifests and hashed.
  std::string canonical_json() const;

  // Parses every rule and board source; throws ConfigError.
  void validate() const;
};

// Trial seed for one (rule, trial) cell.
std::uint64_t trial_seed(std::uint64_t master, const std::string& rule, int trial);

struct CellStatus {
  std::string rule;
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<CellStatus> cells;
  bool analysis_ok = true;
  std::string analysis_error;

  bool ok() const;
};

// Runs every rule x trial cell, writes curve and transcript files, the
// manifest, and the analysis tables under config.output. A failing cell is
// recorded and the rest proceed.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Re-reads the curve files of an experiment directory and writes the
// analysis tables into `out_dir` (default: <dir>/analysis).
void analyze_directory(const std::filesystem::path& dir,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                       const std::optional<analysis::BootstrapOptions>& bootstrap = std::nullopt);

// Renders median_curves.svg and tce_boxplot.svg from the analysis tables.
void plot_directory(const std::filesystem::path& analysis_dir);

std::vector<analysis::EpisodeRecord> read_curve_file(const std::filesystem::path& path, int trial);

}  // namespace gohr
