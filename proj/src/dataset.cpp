#include "apsel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include <json.hpp>

#include "apsel/error.hpp"
#include "apsel/random.hpp"

namespace apsel {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    // trim blanks and optional quotes
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
      field = field.substr(1, field.size() - 2);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw ParseError("non-numeric cell '" + std::string(field) + "'", row, col);
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Layout {
  std::vector<std::size_t> ap_columns;
  std::vector<std::string> ap_ids;
  std::size_t lon = 0;
  std::size_t lat = 0;
  std::size_t floor = 0;
  std::size_t width = 0;
};

Layout parse_header(std::string_view header, const IngestConfig& cfg, const std::string& source) {
  Layout layout;
  const auto fields = split_fields(header);
  layout.width = fields.size();
  bool has_lon = false, has_lat = false, has_floor = false;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 0; c < fields.size(); ++c) {
    const std::string name(fields[c]);
    if (name == cfg.longitude_column) {
      layout.lon = c;
      has_lon = true;
    } else if (name == cfg.latitude_column) {
      layout.lat = c;
      has_lat = true;
    } else if (name == cfg.floor_column) {
      layout.floor = c;
      has_floor = true;
    } else if (!cfg.ap_prefix.empty() && name.starts_with(cfg.ap_prefix)) {
      if (!seen.insert(name).second) {
        throw SchemaError(source + ": duplicate AP column '" + name + "'");
      }
      layout.ap_columns.push_back(c);
      layout.ap_ids.push_back(name);
    }
  }
  std::string missing;
  if (!has_lon) missing += " " + cfg.longitude_column;
  if (!has_lat) missing += " " + cfg.latitude_column;
  if (!has_floor) missing += " " + cfg.floor_column;
  if (layout.ap_columns.empty()) missing += " " + cfg.ap_prefix + "*";
  if (!missing.empty()) throw SchemaError(source + ": missing column(s):" + missing);
  return layout;
}

}  // namespace

std::vector<double> FingerprintDataset::column(std::size_t ap) const {
  const std::size_t m = num_samples();
  std::vector<double> out(m);
  for (std::size_t l = 0; l < m; ++l) out[l] = at(l, ap);
  return out;
}

FingerprintDataset FingerprintDataset::select_rows(std::span<const std::size_t> rows) const {
  FingerprintDataset out;
  out.ap_ids = ap_ids;
  out.not_detected_value = not_detected_value;
  out.transform = transform;
  const std::size_t n = num_aps();
  out.rss.reserve(rows.size() * n);
  out.latitude.reserve(rows.size());
  out.longitude.reserve(rows.size());
  out.floor.reserve(rows.size());
  for (const std::size_t r : rows) {
    const auto src = row(r);
    out.rss.insert(out.rss.end(), src.begin(), src.end());
    out.latitude.push_back(latitude[r]);
    out.longitude.push_back(longitude[r]);
    out.floor.push_back(floor[r]);
  }
  return out;
}

void FingerprintDataset::validate() const {
  const std::size_t m = num_samples();
  if (latitude.size() != m || longitude.size() != m) {
    throw DataError("label vectors have inconsistent lengths");
  }
  if (rss.size() != m * num_aps()) throw DataError("rss matrix shape does not match m x n");
  for (const int f : floor) {
    if (f < 0) throw DataError("negative floor index");
  }
  for (const double v : rss) {
    if (!(v >= not_detected_value && v <= 0.0)) {
      throw DataError("rss value outside [not_detected_value, 0]");
    }
  }
  std::unordered_set<std::string> ids(ap_ids.begin(), ap_ids.end());
  if (ids.size() != ap_ids.size()) throw DataError("ap_ids are not unique");
}

FingerprintDataset load_csv(const std::filesystem::path& path, const IngestConfig& cfg) {
  if (!(cfg.not_detected_value < 0.0)) {
    throw ConfigError("not_detected_value must be negative");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  const std::string source = path.string();

  std::string_view rest(text);
  if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);

  auto next_line = [&rest]() -> std::string_view {
    const std::size_t nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  std::string_view header;
  while (!rest.empty() && header.empty()) header = next_line();
  if (header.empty()) throw EmptyDatasetError(source + ": file is empty");
  const Layout layout = parse_header(header, cfg, source);

  FingerprintDataset d;
  d.ap_ids = layout.ap_ids;
  d.not_detected_value = cfg.not_detected_value;
  const std::size_t n = layout.ap_columns.size();

  std::size_t row = 1;
  while (!rest.empty()) {
    const std::string_view line = next_line();
    ++row;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != layout.width) {
      throw ParseError("expected " + std::to_string(layout.width) + " fields, found " +
                           std::to_string(fields.size()),
                       row, std::min(fields.size(), layout.width) + 1);
    }
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t c = layout.ap_columns[a];
      double v = parse_number(fields[c], row, c + 1);
      if (v == kRawNotDetected) {
        v = cfg.not_detected_value;
      } else if (v > 0.0) {
        throw ParseError("RSS value " + std::string(fields[c]) + " is neither <= 0 dBm nor the sentinel",
                         row, c + 1);
      } else if (v < cfg.not_detected_value) {
        // weaker than the not-detected floor
        v = cfg.not_detected_value;
      }
      d.rss.push_back(v);
    }
    d.longitude.push_back(parse_number(fields[layout.lon], row, layout.lon + 1));
    d.latitude.push_back(parse_number(fields[layout.lat], row, layout.lat + 1));
    const double f = parse_number(fields[layout.floor], row, layout.floor + 1);
    if (f < 0.0 || f != std::floor(f)) {
      throw ParseError("floor must be a non-negative integer", row, layout.floor + 1);
    }
    d.floor.push_back(static_cast<int>(f));
  }
  if (d.num_samples() == 0) throw EmptyDatasetError(source + ": no data rows");
  return d;
}

FingerprintDataset load_csv(std::span<const std::filesystem::path> paths, const IngestConfig& cfg) {
  if (paths.empty()) throw ConfigError("no dataset paths given");
  FingerprintDataset out = load_csv(paths.front(), cfg);
  for (std::size_t p = 1; p < paths.size(); ++p) {
    FingerprintDataset part = load_csv(paths[p], cfg);
    if (part.ap_ids != out.ap_ids) {
      throw SchemaError(paths[p].string() + ": AP columns differ from " + paths.front().string());
    }
    out.rss.insert(out.rss.end(), part.rss.begin(), part.rss.end());
    out.latitude.insert(out.latitude.end(), part.latitude.begin(), part.latitude.end());
    out.longitude.insert(out.longitude.end(), part.longitude.begin(), part.longitude.end());
    out.floor.insert(out.floor.end(), part.floor.begin(), part.floor.end());
  }
  return out;
}

void write_transform_json(const FingerprintDataset& d, const std::filesystem::path& path) {
  nlohmann::json j = {
      {"lat_min", d.transform.lat_min},
      {"lat_max", d.transform.lat_max},
      {"lon_min", d.transform.lon_min},
      {"lon_max", d.transform.lon_max},
      {"not_detected_value", d.not_detected_value},
  };
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void read_transform_json(FingerprintDataset& d, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    d.transform.lat_min = j.at("lat_min").get<double>();
    d.transform.lat_max = j.at("lat_max").get<double>();
    d.transform.lon_min = j.at("lon_min").get<double>();
    d.transform.lon_max = j.at("lon_max").get<double>();
    d.not_detected_value = j.at("not_detected_value").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_csv(const FingerprintDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& id : d.ap_ids) out << id << ',';
  out << "LONGITUDE,LATITUDE,FLOOR\n";
  const std::size_t n = d.num_aps();
  for (std::size_t l = 0; l < d.num_samples(); ++l) {
    for (std::size_t a = 0; a < n; ++a) {
      const double v = d.at(l, a);
      out << (v == d.not_detected_value ? std::string("100") : format_double(v)) << ',';
    }
    out << format_double(d.longitude[l]) << ',' << format_double(d.latitude[l]) << ','
        << d.floor[l] << '\n';
  }
  write_transform_json(d, path.string() + ".json");
}

FingerprintDataset normalize_labels(const FingerprintDataset& d) {
  if (d.num_samples() < 2) {
    throw DegenerateRangeError("normalization needs at least 2 samples");
  }
  const auto [lat_lo, lat_hi] = std::minmax_element(d.latitude.begin(), d.latitude.end());
  const auto [lon_lo, lon_hi] = std::minmax_element(d.longitude.begin(), d.longitude.end());
  const double lat_min = *lat_lo, lat_max = *lat_hi;
  const double lon_min = *lon_lo, lon_max = *lon_hi;
  if (!(lat_max > lat_min)) throw DegenerateRangeError("latitude column is constant");
  if (!(lon_max > lon_min)) throw DegenerateRangeError("longitude column is constant");

  FingerprintDataset out = d;
  const bool lat_unit = lat_min == 0.0 && lat_max == 1.0;
  const bool lon_unit = lon_min == 0.0 && lon_max == 1.0;
  if (!lat_unit) {
    for (double& v : out.latitude) v = (v - lat_min) / (lat_max - lat_min);
    out.transform.lat_min = d.transform.lat_to_metric(lat_min);
    out.transform.lat_max = d.transform.lat_to_metric(lat_max);
  }
  if (!lon_unit) {
    for (double& v : out.longitude) v = (v - lon_min) / (lon_max - lon_min);
    out.transform.lon_min = d.transform.lon_to_metric(lon_min);
    out.transform.lon_max = d.transform.lon_to_metric(lon_max);
  }
  return out;
}

DatasetSplit split(const FingerprintDataset& d, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie strictly between 0 and 1");
  }
  std::map<int, std::vector<std::size_t>> by_floor;
  for (std::size_t l = 0; l < d.num_samples(); ++l) by_floor[d.floor[l]].push_back(l);

  std::vector<std::size_t> train_idx, test_idx;
  for (auto& [floor, rows] : by_floor) {
    if (rows.size() < 2) {
      throw StratificationError("floor " + std::to_string(floor) + " has fewer than 2 samples");
    }
    auto rng = make_stream(seed, static_cast<std::uint64_t>(floor));
    for (std::size_t i = rows.size() - 1; i > 0; --i) {
      std::swap(rows[i], rows[uniform_below(rng, i + 1)]);
    }
    const double target = test_fraction * static_cast<double>(rows.size());
    std::size_t n_test = static_cast<std::size_t>(std::llround(target));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    test_idx.insert(test_idx.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  DatasetSplit out;
  out.seed = seed;
  out.train = d.select_rows(train_idx);
  out.test = d.select_rows(test_idx);
  out.train_indices = std::move(train_idx);
  out.test_indices = std::move(test_idx);
  return out;
}

}  // namespace apsel
