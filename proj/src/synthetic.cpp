#include "apsel/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "apsel/error.hpp"
#include "apsel/random.hpp"

namespace apsel {

namespace {

struct Building {
  double lon_lo, lon_hi, lat_lo, lat_hi;
  int floors;
};

// Footprints roughly matching the UJI campus bounding box (projected meters).
constexpr std::array<Building, 3> kBuildings{{
    {-7691.0, -7575.0, 4864915.0, 4865017.0, 4},
    {-7560.0, -7435.0, 4864835.0, 4864950.0, 4},
    {-7420.0, -7300.0, 4864746.0, 4864875.0, 5},
}};

struct Point {
  double lon, lat, z;
  int building;  // -1 outside
  int floor;
};

struct RawSurvey {
  std::vector<int> rss;  // m x n, 100 = not detected
  std::vector<double> longitude, latitude;
  std::vector<int> floor, building, space, relative, user, phone;
  std::vector<long> timestamp;
};

double round4(double v) { return std::round(v * 1e4) / 1e4; }

Point random_indoor(std::mt19937_64& rng, int building, int floor, double floor_height, double z_above) {
  const Building& b = kBuildings[static_cast<std::size_t>(building)];
  return {b.lon_lo + uniform01(rng) * (b.lon_hi - b.lon_lo), b.lat_lo + uniform01(rng) * (b.lat_hi - b.lat_lo),
          floor * floor_height + z_above, building, floor};
}

RawSurvey generate(const SurveyConfig& cfg) {
  if (cfg.num_aps == 0 || cfg.num_samples == 0 || cfg.reference_points == 0) {
    throw ConfigError("survey sizes must be positive");
  }
  if (cfg.silent_aps + cfg.external_aps >= cfg.num_aps) {
    throw ConfigError("silent + external APs must leave room for building APs");
  }
  std::mt19937_64 rng = make_stream(cfg.seed, 0);

  // (building, floor) slots weighted equally.
  std::vector<std::pair<int, int>> slots;
  for (int b = 0; b < static_cast<int>(kBuildings.size()); ++b) {
    for (int f = 0; f < kBuildings[static_cast<std::size_t>(b)].floors; ++f) slots.emplace_back(b, f);
  }

  // AP placement: shuffled column order so silent/external APs are spread
  // over the WAP numbering as in real captures.
  const std::size_t n = cfg.num_aps;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_below(rng, i + 1)]);

  std::vector<Point> aps(n);
  std::vector<double> tx(n);
  std::vector<bool> silent(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t a = order[r];
    if (r < cfg.silent_aps) {
      silent[a] = true;
    } else if (r < cfg.silent_aps + cfg.external_aps) {
      // around the campus, up to 80 m beyond the footprint
      const double lon = -7771.0 + uniform01(rng) * 551.0;
      const double lat = 4864666.0 + uniform01(rng) * 431.0;
      aps[a] = {lon, lat, uniform01(rng) * 12.0, -1, 0};
      tx[a] = -45.0 + 4.0 * standard_normal(rng);
    } else {
      const auto& [b, f] = slots[uniform_below(rng, slots.size())];
      aps[a] = random_indoor(rng, b, f, cfg.floor_height_m, 2.5);
      tx[a] = -36.0 + 3.0 * standard_normal(rng);
    }
  }

  // Reference points and their fixed shadowing per AP.
  const std::size_t rps = cfg.reference_points;
  std::vector<Point> ref(rps);
  std::vector<int> ref_phone(rps), ref_user(rps), ref_space(rps), ref_rel(rps);
  for (std::size_t p = 0; p < rps; ++p) {
    const auto& [b, f] = slots[p % slots.size()];
    ref[p] = random_indoor(rng, b, f, cfg.floor_height_m, 1.2);
    ref[p].lon = round4(ref[p].lon);
    ref[p].lat = round4(ref[p].lat);
    ref_phone[p] = static_cast<int>(uniform_below(rng, 25));
    ref_user[p] = 1 + static_cast<int>(uniform_below(rng, 18));
    ref_space[p] = 100 + static_cast<int>(p / slots.size());
    ref_rel[p] = 1 + static_cast<int>(uniform_below(rng, 2));
  }
  std::vector<double> phone_offset(25);
  for (double& o : phone_offset) o = cfg.device_offset_sigma_db * standard_normal(rng);

  std::vector<double> mean_rss(rps * n, -1e9);
  for (std::size_t p = 0; p < rps; ++p) {
    for (std::size_t a = 0; a < n; ++a) {
      if (silent[a]) continue;
      const double dx = ref[p].lon - aps[a].lon;
      const double dy = ref[p].lat - aps[a].lat;
      const double dz = ref[p].z - aps[a].z;
      const double dist = std::max(1.0, std::sqrt(dx * dx + dy * dy + dz * dz));
      double loss = 10.0 * cfg.path_loss_exponent * std::log10(dist);
      if (aps[a].building == ref[p].building) {
        loss += cfg.floor_attenuation_db * std::abs(aps[a].floor - ref[p].floor);
      } else {
        loss += cfg.building_attenuation_db;
        if (aps[a].building >= 0) loss += 0.5 * cfg.floor_attenuation_db * std::abs(aps[a].floor - ref[p].floor);
      }
      mean_rss[p * n + a] = tx[a] - loss + cfg.shadowing_sigma_db * standard_normal(rng);
    }
  }

  RawSurvey raw;
  const std::size_t m = cfg.num_samples;
  raw.rss.assign(m * n, 100);
  long clock = 1369900000;
  for (std::size_t l = 0; l < m; ++l) {
    const std::size_t p = l % rps;
    const double offset = phone_offset[static_cast<std::size_t>(ref_phone[p])];
    for (std::size_t a = 0; a < n; ++a) {
      const double mu = mean_rss[p * n + a];
      if (mu < -200.0) continue;
      const double v = mu + offset + cfg.capture_noise_sigma_db * standard_normal(rng);
      if (v < cfg.sensitivity_dbm || uniform01(rng) < cfg.dropout) continue;
      raw.rss[l * n + a] = static_cast<int>(std::clamp(std::lround(v), -104L, 0L));
    }
    raw.longitude.push_back(ref[p].lon);
    raw.latitude.push_back(ref[p].lat);
    raw.floor.push_back(ref[p].floor);
    raw.building.push_back(ref[p].building);
    raw.space.push_back(ref_space[p]);
    raw.relative.push_back(ref_rel[p]);
    raw.user.push_back(ref_user[p]);
    raw.phone.push_back(ref_phone[p]);
    clock += 7 + static_cast<long>(uniform_below(rng, 20));
    raw.timestamp.push_back(clock);
  }
  return raw;
}

std::string ap_name(std::size_t a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "WAP%03zu", a + 1);
  return buf;
}

}  // namespace

FingerprintDataset simulate_survey(const SurveyConfig& cfg, const IngestConfig& ingest) {
  const RawSurvey raw = generate(cfg);
  FingerprintDataset d;
  d.not_detected_value = ingest.not_detected_value;
  for (std::size_t a = 0; a < cfg.num_aps; ++a) d.ap_ids.push_back(ap_name(a));
  d.rss.reserve(raw.rss.size());
  for (const int v : raw.rss) {
    d.rss.push_back(v == 100 ? ingest.not_detected_value : std::max<double>(v, ingest.not_detected_value));
  }
  d.longitude = raw.longitude;
  d.latitude = raw.latitude;
  d.floor = raw.floor;
  return d;
}

void write_survey_csv(const SurveyConfig& cfg, const std::filesystem::path& path) {
  const RawSurvey raw = generate(cfg);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const std::size_t n = cfg.num_aps;
  for (std::size_t a = 0; a < n; ++a) out << ap_name(a) << ',';
  out << "LONGITUDE,LATITUDE,FLOOR,BUILDINGID,SPACEID,RELATIVEPOSITION,USERID,PHONEID,TIMESTAMP\n";
  char buf[64];
  for (std::size_t l = 0; l < raw.floor.size(); ++l) {
    for (std::size_t a = 0; a < n; ++a) out << raw.rss[l * n + a] << ',';
    std::snprintf(buf, sizeof buf, "%.4f,%.4f", raw.longitude[l], raw.latitude[l]);
    out << buf << ',' << raw.floor[l] << ',' << raw.building[l] << ',' << raw.space[l] << ','
        << raw.relative[l] << ',' << raw.user[l] << ',' << raw.phone[l] << ',' << raw.timestamp[l] << '\n';
  }
}

}  // namespace apsel
