#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace apsel {

/// Cell value UJIIndoorLoc uses for "AP not detected".
inline constexpr double kRawNotDetected = 100.0;

struct IngestConfig {
  std::string ap_prefix = "WAP";
  std::string longitude_column = "LONGITUDE";
  std::string latitude_column = "LATITUDE";
  std::string floor_column = "FLOOR";
  /// Replacement for the raw sentinel; 1 dB below the weakest observable RSS.
  double not_detected_value = -105.0;
};

/// Affine map from stored coordinates to the metric frame:
/// metric = min + stored * (max - min). Identity for unnormalized data.
struct CoordinateTransform {
  double lat_min = 0.0;
  double lat_max = 1.0;
  double lon_min = 0.0;
  double lon_max = 1.0;

  double lat_to_metric(double u) const { return lat_min + u * (lat_max - lat_min); }
  double lon_to_metric(double u) const { return lon_min + u * (lon_max - lon_min); }
  bool is_identity() const {
    return lat_min == 0.0 && lat_max == 1.0 && lon_min == 0.0 && lon_max == 1.0;
  }
  bool operator==(const CoordinateTransform&) const = default;
};

/// Radio map: m samples x n APs of RSS (dBm, sentinel already substituted)
/// with latitude/longitude/floor labels. Immutable once built.
struct FingerprintDataset {
  std::vector<double> rss;  // row-major, m * n
  std::vector<double> latitude;
  std::vector<double> longitude;
  std::vector<int> floor;
  std::vector<std::string> ap_ids;
  double not_detected_value = -105.0;
  CoordinateTransform transform;

  std::size_t num_samples() const { return floor.size(); }
  std::size_t num_aps() const { return ap_ids.size(); }

  double at(std::size_t sample, std::size_t ap) const { return rss[sample * num_aps() + ap]; }
  std::span<const double> row(std::size_t sample) const {
    return {rss.data() + sample * num_aps(), num_aps()};
  }
  std::vector<double> column(std::size_t ap) const;

  /// Copy holding only the given rows, in the given order.
  FingerprintDataset select_rows(std::span<const std::size_t> rows) const;

  /// Throws DataError if any structural invariant is violated.
  void validate() const;
};

struct DatasetSplit {
  FingerprintDataset train;
  FingerprintDataset test;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_indices;  // ascending source rows
  std::vector<std::size_t> test_indices;
};

/// Reads one UJIIndoorLoc-style CSV. Columns other than the AP columns and
/// the three label columns are ignored.
FingerprintDataset load_csv(const std::filesystem::path& path, const IngestConfig& cfg = {});

/// Reads several CSVs sharing the same AP columns and concatenates them.
FingerprintDataset load_csv(std::span<const std::filesystem::path> paths,
                            const IngestConfig& cfg = {});

/// Writes the dataset in the ingest schema (not-detected cells written back
/// as the raw sentinel) plus `<path>.json` holding the transform.
void write_csv(const FingerprintDataset& d, const std::filesystem::path& path);

void write_transform_json(const FingerprintDataset& d, const std::filesystem::path& path);

/// Restores transform and not_detected_value from a sidecar written by write_csv.
void read_transform_json(FingerprintDataset& d, const std::filesystem::path& path);

/// Min-max scales latitude and longitude to [0,1]. The returned transform
/// maps back to the original metric frame, composing with any transform the
/// input already carried, so normalizing twice is a no-op on values.
FingerprintDataset normalize_labels(const FingerprintDataset& d);

/// Floor-stratified, seeded train/test split.
DatasetSplit split(const FingerprintDataset& d, double test_fraction, std::uint64_t seed);

}  // namespace apsel
