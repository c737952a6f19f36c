#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "apsel/dataset.hpp"

namespace apsel {

enum class ImportanceMetric { Entropy, Variance, Average, Max };

std::string_view to_string(ImportanceMetric metric);
/// Accepts entropy|variance|average|max (case-insensitive); throws ConfigError.
ImportanceMetric parse_metric(std::string_view name);

/// Per-AP importance. `scores` are min-max normalized raw scores in [0,1];
/// `active` marks APs that count as having non-zero importance.
struct ImportanceVector {
  ImportanceMetric metric = ImportanceMetric::Entropy;
  std::vector<double> raw_scores;
  std::vector<double> scores;
  std::vector<bool> active;

  std::size_t size() const { return scores.size(); }
};

/// Shannon entropy (bits) of each AP's RSS distribution, one bin per
/// distinct integer dBm value (the not-detected value is an ordinary bin).
ImportanceVector importance_entropy(const FingerprintDataset& d);
/// Unbiased sample variance per AP. Needs m >= 2.
ImportanceVector importance_variance(const FingerprintDataset& d);
ImportanceVector importance_average(const FingerprintDataset& d);
ImportanceVector importance_max(const FingerprintDataset& d);
ImportanceVector importance(const FingerprintDataset& d, ImportanceMetric metric);

/// Min-max scaling to [0,1]; a constant input maps to all zeros.
std::vector<double> min_max_normalize(const std::vector<double>& raw);

/// |Pearson| between AP columns, restricted to active APs.
struct RedundancyMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n x n, exactly symmetric
  std::vector<bool> active_mask;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

RedundancyMatrix redundancy(const FingerprintDataset& d, const ImportanceVector& imp);

/// CSV with columns ap_id,raw,normalized,active.
void write_importance_csv(const FingerprintDataset& d, const ImportanceVector& imp,
                          const std::filesystem::path& path);
/// Dense n x n CSV with an ap_id header row and column.
void write_redundancy_csv(const FingerprintDataset& d, const RedundancyMatrix& red,
                          const std::filesystem::path& path);

}  // namespace apsel
