#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "apsel/dataset.hpp"

namespace apsel {

/// kNN fingerprint matcher settings. Distance is Euclidean over the chosen
/// AP dimensions of the sentinel-substituted RSS.
struct LocalizerConfig {
  int k_neighbors = 3;
  double floor_height_m = 3.0;
};

struct Position {
  double latitude = 0.0;
  double longitude = 0.0;
  int floor = 0;
};

/// Position in the training set's stored coordinate frame: mean (lat, lon)
/// of the k nearest samples, floor by majority vote (ties go to the floor
/// reached first in distance order). Neighbour order is (distance, index).
Position predict(const FingerprintDataset& train, std::span<const double> query_rss,
                 std::span<const std::size_t> subset, const LocalizerConfig& cfg);

/// 3D distance in meters, floors converted with floor_height_m.
double error_3d(const Position& predicted, const Position& truth, double floor_height_m);

struct LocalizationReport {
  std::vector<double> per_query_error_m;
  std::vector<bool> floor_hit;
  double mean_error_m = 0.0;
  double median_error_m = 0.0;
  double p95_error_m = 0.0;
  double floor_accuracy = 0.0;
  std::size_t num_aps_used = 0;
  std::size_t num_aps_total = 0;
  double reduction_fraction = 0.0;
};

/// Linear-interpolated percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

/// Localizes every test sample against the training partition. Errors are
/// reported in meters through the datasets' coordinate transform.
LocalizationReport evaluate(const DatasetSplit& split, std::span<const std::size_t> subset,
                            const LocalizerConfig& cfg);

nlohmann::json to_json(const LocalizationReport& report, bool include_per_query = false);
/// One row per query: index,error_m,floor_hit.
void write_report_csv(const LocalizationReport& report, const std::filesystem::path& path);

}  // namespace apsel
