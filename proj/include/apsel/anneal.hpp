#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "apsel/qubo.hpp"
#include "apsel/selection.hpp"

namespace apsel {

struct SampleRow {
  BitVector x;
  double energy = 0.0;  // re-evaluated with energy(model, x)
  int occurrences = 0;
};

struct SampleTiming {
  double total_anneal_seconds = 0.0;
  double per_read_seconds = 0.0;
};

/// Distinct final states, ascending by energy (ties: lexicographic x).
struct SampleSet {
  std::vector<SampleRow> rows;
  SampleTiming timing;
  AnnealConfig config;
  SamplerKind sampler = SamplerKind::SA;

  int num_reads() const;
  const SampleRow& best() const { return rows.front(); }
};

/// Simulated annealing: per read, a random start followed by num_sweeps
/// in-order Metropolis passes of single-bit flips while the inverse
/// temperature rises geometrically from cfg.beta_hot to cfg.beta.
SampleSet sa_sample(const QuboModel& model, const AnnealConfig& cfg);

/// Simulated quantum annealing by path-integral Monte Carlo on the Ising
/// form: cfg.trotter_slices replicas at inverse temperature cfg.beta, each
/// slice weighted 1/P, neighbouring slices (periodic) coupled by
/// J(G) = ln(coth(beta G / P)) / (2 beta) while the transverse field G falls
/// linearly from cfg.gamma to cfg.gamma * cfg.gamma_final_fraction. Each
/// read returns its lowest-energy slice after the last sweep.
SampleSet sqa_sample(const QuboModel& model, const AnnealConfig& cfg);

/// Inter-slice ferromagnetic coupling for transverse field `gamma`.
double trotter_coupling(double beta, double gamma, int slices);

/// Fraction of reads whose energy is within 1e-9 of reference_energy (or below).
double success_probability(const SampleSet& samples, double reference_energy);

/// Time-to-solution at `target_probability`: per-read time scaled by
/// ln(1 - target) / ln(1 - p_s); per-read time when p_s = 1; nullopt when
/// no read succeeded.
std::optional<double> tts(const SampleSet& samples, double reference_energy,
                          double target_probability = 0.99);

struct SolveOutcome {
  SelectionResult selection;
  BitVector best;
  std::optional<SampleSet> samples;  // absent for Exact
};

/// Runs the sampler and takes the lowest-energy state (ties: lexicographic).
/// AllAps is not a sampler and is rejected with ConfigError.
SolveOutcome solve(const QuboModel& model, SamplerKind sampler, const AnnealConfig& cfg);

SelectionResult select(const QuboModel& model, SamplerKind sampler, const AnnealConfig& cfg);

nlohmann::json to_json(const AnnealConfig& cfg);
AnnealConfig anneal_config_from_json(const nlohmann::json& j);
/// {rows: [{x: "0101..", energy, occurrences}], timing{}, config{}}.
nlohmann::json to_json(const SampleSet& samples, bool include_timing = true);
nlohmann::json to_json(const SelectionResult& result, bool include_timing = true);
void write_samples_json(const SampleSet& samples, const std::filesystem::path& path);

}  // namespace apsel
