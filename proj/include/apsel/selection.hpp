#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace apsel {

/// One selection decision per AP (0 or 1).
using BitVector = std::vector<std::uint8_t>;

std::string to_bit_string(const BitVector& x);
BitVector from_bit_string(std::string_view bits);

enum class SamplerKind { SA, SQA, Exact, AllAps };

std::string_view to_string(SamplerKind kind);
/// Accepts sa|sqa|exact|all-aps; throws ConfigError.
SamplerKind parse_sampler(std::string_view name);

struct AnnealConfig {
  int num_reads = 1000;
  int num_sweeps = 1000;
  /// SA: final inverse temperature of the geometric schedule.
  /// SQA: path-integral inverse temperature.
  double beta = 10.0;
  /// SA: initial inverse temperature.
  double beta_hot = 0.1;
  /// SQA: initial transverse field.
  double gamma = 1.0;
  /// SQA: the field decays linearly to gamma * gamma_final_fraction.
  double gamma_final_fraction = 0.01;
  int trotter_slices = 8;
  std::uint64_t seed = 0;

  /// Throws ConfigError on non-positive counts or non-finite/non-positive
  /// temperatures and fields.
  void validate(SamplerKind kind) const;
};

struct SelectionResult {
  std::vector<std::size_t> selected;  // ascending AP indices
  std::size_t achieved_k = 0;
  std::size_t num_aps = 0;
  double best_energy = 0.0;
  SamplerKind sampler = SamplerKind::Exact;
  AnnealConfig config;
  std::optional<double> tts_seconds;
  double solve_seconds = 0.0;
};

/// Selected indices of a bit vector, ascending.
std::vector<std::size_t> selected_indices(const BitVector& x);

}  // namespace apsel
