#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "apsel/anneal.hpp"
#include "apsel/dataset.hpp"
#include "apsel/localize.hpp"
#include "apsel/qubo.hpp"

namespace apsel {

/// Parameter names accepted on a sweep axis.
/// alpha, eta, k, metric, beta, gamma, sweeps, reads, trotter, knn
struct SweepAxis {
  std::string parameter;
  std::vector<std::string> values;
};

struct ExperimentConfig {
  std::vector<std::filesystem::path> dataset_paths;
  IngestConfig ingest;
  QuboParams qubo;  // k=20, alpha=0.8, eta=2.0, entropy
  AnnealConfig anneal;  // reads=1000, sweeps=1000, beta=10, gamma=1
  LocalizerConfig localizer;
  std::vector<SamplerKind> samplers{SamplerKind::SQA, SamplerKind::SA, SamplerKind::AllAps};
  std::optional<SweepAxis> sweep;
  int trials = 10;
  std::uint64_t base_seed = 1;
  double test_fraction = 0.2;
  double tts_target = 0.99;
  std::filesystem::path output_dir;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Applies `value` to the named parameter of `cfg`; throws ConfigError for
/// unknown names or unparsable values.
void apply_parameter(ExperimentConfig& cfg, const std::string& parameter, const std::string& value);

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct TrialRecord {
  std::string parameter;  // "none" without a sweep
  std::string value;
  SamplerKind sampler = SamplerKind::SQA;
  int trial = 0;
  std::uint64_t seed = 0;
  int target_k = 0;
  SelectionResult selection;
  LocalizationReport report;
  std::optional<SampleSet> samples;
  double reference_energy = 0.0;
  double success_probability = 0.0;
};

/// One row of aggregate.csv: statistics over trials for one
/// (axis value, sampler) cell.
struct AggregateRow {
  std::string parameter;
  std::string value;
  SamplerKind sampler = SamplerKind::SQA;
  int trials = 0;
  double achieved_k_mean = 0.0;
  std::size_t achieved_k_min = 0;
  std::size_t achieved_k_max = 0;
  int k_hit_trials = 0;
  double best_energy_mean = 0.0;
  double success_probability_mean = 0.0;
  double tts_seconds_mean = 0.0;  // over trials where TTS is defined
  int tts_defined_trials = 0;
  double solve_seconds_mean = 0.0;
  double mean_error_m_mean = 0.0;
  double mean_error_m_std = 0.0;
  double median_error_m_mean = 0.0;
  double p95_error_m_mean = 0.0;
  double floor_accuracy_mean = 0.0;
  double floor_accuracy_std = 0.0;
  double num_aps_used_mean = 0.0;
  double reduction_fraction_mean = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;
  std::vector<AggregateRow> aggregate;
  std::string tts_reference;  // "exact" or "best-known"
  nlohmann::json manifest;
};

/// Loads and normalizes the configured datasets. A single path with a
/// `<path>.json` transform sidecar is read as already normalized.
FingerprintDataset load_experiment_dataset(const ExperimentConfig& cfg);

/// Runs every (axis value, trial, sampler) cell on an already normalized
/// dataset. Trial t uses seed base_seed + t for the split and samplers.
/// Writes artifacts when cfg.output_dir is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const FingerprintDataset& dataset);

/// Loads the dataset from cfg.dataset_paths, then run_experiment.
ExperimentResult run(const ExperimentConfig& cfg);

/// Requires cfg.sweep; returns one aggregate row per (value, sampler).
std::vector<AggregateRow> sweep(const ExperimentConfig& cfg, const FingerprintDataset& dataset);

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records);

/// Column names of aggregate.csv, in order.
std::vector<std::string> aggregate_columns();
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path);

/// Rebuilds the aggregate table from the selection_/localization_ JSON
/// artifacts of an experiment directory.
std::vector<AggregateRow> recompute_aggregate(const std::filesystem::path& dir);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Re-runs the experiment recorded in `manifest_path` into `output_dir` and
/// returns the artifact names whose deterministic content hash differs.
std::vector<std::string> replay_manifest(const std::filesystem::path& manifest_path,
                                         const std::filesystem::path& output_dir);

}  // namespace apsel
