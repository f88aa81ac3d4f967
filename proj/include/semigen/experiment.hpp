#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "semigen/data.hpp"
#include "semigen/model.hpp"
#include "semigen/training.hpp"

namespace semigen {

using Json = nlohmann::json;

// Run configuration. A config file is a JSON object whose keys mirror
// default_config(); unknown keys are rejected. Resolution order, later wins:
//   built-in defaults < preset (the "preset" key) < config file keys < overrides
// Overrides are "dotted.key=value" strings; value is parsed as JSON and falls
// back to a plain string.

Json default_config();

/// Patch applied for a preset name: r1, r1+lm, r12+lm, r123+lm.
Json preset_patch(const std::string& name);
const std::vector<std::string>& preset_names();

Json resolve_config(const Json& file_config, const std::vector<std::string>& overrides = {});

/// Hex FNV-1a of the resolved config's canonical dump.
std::string config_hash(const Json& resolved);

struct LmSource {
  /// "file": load from path; "split": train on the trainer-visible targets.
  std::string kind = "file";
  std::string path;
};

struct ExperimentConfig {
  std::string preset;
  std::uint64_t seed = 1;
  SynthTaskSpec synthetic;
  std::string src_path;
  std::string tgt_path;
  SplitSizes split;
  std::uint64_t split_seed = 1;
  std::size_t min_count = 1;
  ModelConfig model;
  TrainConfig train;
  LmSource lm;
  std::string output_dir;
  Json resolved;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const Json& resolved);

struct SplitMetrics {
  double ppl = 0.0;
  double bleu = 0.0;
  double token_acc = 0.0;
};

struct ExperimentResult {
  TrainResult train;
  SplitMetrics dev;
  SplitMetrics test;
  std::string config_hash;
  Json report;
};

/// Builds data, vocabularies and LM, trains, evaluates the restored best
/// model on dev and test. Writes manifest.json, metrics.csv, model.ckpt and
/// report.json (plus lm.arpa when the LM is trained here) into out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

// --- sweeps -----------------------------------------------------------------------

struct SweepRow {
  std::string preset;
  std::string axis;
  std::size_t scale = 0;
  std::uint64_t seed = 0;
  std::size_t best_step = 0;
  double dev_ppl = 0.0;
  double dev_bleu = 0.0;
  double test_bleu = 0.0;
  double test_acc = 0.0;
  double test_ppl = 0.0;
};

struct SweepSpec {
  /// "labeled" or "unlabeled" (sets both unlabeled pools).
  std::string axis;
  std::vector<std::size_t> values;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> presets{"r1", "r123+lm"};
  std::size_t jobs = 1;
};

/// Runs every (preset, value, seed) point into out_dir/<preset>_<axis><value>_s<seed>
/// and writes out_dir/sweep.csv plus test_bleu.svg and dev_ppl.svg.
std::vector<SweepRow> run_sweep(const Json& file_config, const std::vector<std::string>& overrides,
                                const SweepSpec& spec, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(std::istream& in);

/// Line plot of the per-preset mean of a column ("test_bleu", "dev_ppl", ...)
/// against scale. Pure function of the rows.
std::string sweep_svg(const std::vector<SweepRow>& rows, const std::string& column);

}  // namespace semigen
