#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "apsel/analysis.hpp"
#include "apsel/selection.hpp"

namespace apsel {

struct QuboParams {
  double alpha = 0.8;
  double eta = 2.0;
  int k = 20;
  ImportanceMetric metric = ImportanceMetric::Entropy;
};

struct QuadraticTerm {
  std::uint32_t i = 0;
  std::uint32_t j = 0;  // always i < j
  double value = 0.0;
  bool operator==(const QuadraticTerm&) const = default;
};

/// E(x) = sum_i linear[i] x_i + sum_{i<j} Q_ij x_i x_j + offset.
/// `quadratic` is sorted by (i, j) with unique keys.
struct QuboModel {
  std::vector<double> linear;
  std::vector<QuadraticTerm> quadratic;
  double offset = 0.0;
  QuboParams params;

  std::size_t size() const { return linear.size(); }
  /// Coefficient of x_i x_j for i != j (0 when absent).
  double quadratic_at(std::size_t i, std::size_t j) const;
  /// Throws ConfigError on out-of-range, unordered or duplicate keys.
  void validate() const;
};

/// Budget-constrained objective with the penalty eta (sum x - k)^2 expanded
/// using x_i^2 = x_i:
///   linear[i]    = -alpha I_i + eta (1 - 2k)   (no reward for inactive APs)
///   Q_ij         = (1 - alpha) R_ij + 2 eta
///   offset       = eta k^2
QuboModel build_qubo(const ImportanceVector& imp, const RedundancyMatrix& red, const QuboParams& params);

double energy(const QuboModel& model, std::span<const std::uint8_t> x);

/// Symmetric n x n matrix of quadratic coefficients with a zero diagonal.
std::vector<double> dense_couplings(const QuboModel& model);

/// H(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset over s in {-1,+1}^n.
struct IsingModel {
  std::vector<double> h;
  std::vector<QuadraticTerm> couplings;
  double offset = 0.0;

  std::size_t size() const { return h.size(); }
};

/// Substitutes x_i = (s_i + 1) / 2; energies agree state for state.
IsingModel to_ising(const QuboModel& model);

double ising_energy(const IsingModel& model, std::span<const std::int8_t> spins);

/// Largest n brute_force will enumerate.
inline constexpr std::size_t kMaxExactVariables = 24;
/// Largest n for which the full energy spectrum is returned.
inline constexpr std::size_t kMaxSpectrumVariables = 16;

struct ExactSolution {
  SelectionResult selection;
  BitVector best;
  /// Every state's energy, ascending; empty when n > kMaxSpectrumVariables.
  std::vector<double> spectrum;
};

/// Global minimizer by exhaustive enumeration. Ties resolve to the
/// lexicographically smallest bit vector (x_0 first).
ExactSolution brute_force(const QuboModel& model);

nlohmann::json to_json(const QuboModel& model);
QuboModel qubo_from_json(const nlohmann::json& j);
void write_qubo_json(const QuboModel& model, const std::filesystem::path& path);
QuboModel read_qubo_json(const std::filesystem::path& path);

}  // namespace apsel
