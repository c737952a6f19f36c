#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "apsel/dataset.hpp"

namespace apsel {

/// Parameters of a simulated multi-building WiFi survey shaped like
/// UJIIndoorLoc: 520 AP columns, 3 buildings (4, 4 and 5 floors), projected
/// metric coordinates, integer RSS in [-104, 0] with 100 for "not detected".
struct SurveyConfig {
  std::size_t num_aps = 520;
  std::size_t num_samples = 21048;
  std::size_t reference_points = 930;
  /// AP columns that are never heard anywhere.
  std::size_t silent_aps = 55;
  /// APs outside the buildings (heard weakly, near edges).
  std::size_t external_aps = 70;
  double floor_height_m = 3.0;
  double path_loss_exponent = 3.0;
  double floor_attenuation_db = 14.0;
  double building_attenuation_db = 12.0;
  double shadowing_sigma_db = 5.0;
  double capture_noise_sigma_db = 4.0;
  double device_offset_sigma_db = 3.0;
  double sensitivity_dbm = -100.0;
  /// Probability that an audible AP is missing from a scan.
  double dropout = 0.12;
  std::uint64_t seed = 2014;
};

/// Simulates a survey with a log-distance path-loss model, per-floor and
/// per-building wall losses, spatially fixed shadowing per (AP, reference
/// point), per-capture noise and per-device offsets. Raw sentinel cells are
/// substituted using `ingest` exactly as load_csv would.
FingerprintDataset simulate_survey(const SurveyConfig& cfg, const IngestConfig& ingest = {});

/// Writes the survey in the raw UJIIndoorLoc column layout (WAP001..,
/// LONGITUDE, LATITUDE, FLOOR, BUILDINGID, SPACEID, RELATIVEPOSITION,
/// USERID, PHONEID, TIMESTAMP).
void write_survey_csv(const SurveyConfig& cfg, const std::filesystem::path& path);

}  // namespace apsel
