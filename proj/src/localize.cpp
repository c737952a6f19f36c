#include "apsel/localize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>

#include "apsel/error.hpp"
#include "apsel/parallel.hpp"

namespace apsel {

namespace {

void check_inputs(const FingerprintDataset& train, std::span<const std::size_t> subset,
                  const LocalizerConfig& cfg) {
  if (subset.empty()) throw ConfigError("AP subset is empty");
  std::vector<std::size_t> sorted(subset.begin(), subset.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() >= train.num_aps()) throw ConfigError("AP subset index out of range");
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError("AP subset contains duplicates");
  }
  if (cfg.k_neighbors < 1) throw ConfigError("k_neighbors must be at least 1");
  if (static_cast<std::size_t>(cfg.k_neighbors) > train.num_samples()) {
    throw ConfigError("k_neighbors=" + std::to_string(cfg.k_neighbors) + " exceeds the " +
                      std::to_string(train.num_samples()) + " training samples");
  }
  if (!(cfg.floor_height_m >= 0.0)) throw ConfigError("floor height must be non-negative");
}

struct Neighbour {
  double dist2;
  std::size_t index;
  bool operator<(const Neighbour& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
};

/// Training RSS restricted to the subset, row-major (m_train x |subset|).
std::vector<double> project(const FingerprintDataset& d, std::span<const std::size_t> subset) {
  const std::size_t s = subset.size();
  std::vector<double> out(d.num_samples() * s);
  for (std::size_t l = 0; l < d.num_samples(); ++l) {
    for (std::size_t c = 0; c < s; ++c) out[l * s + c] = d.at(l, subset[c]);
  }
  return out;
}

/// Integer copy of the projected RSS, used when every value is an integer
/// and squared distances stay below 2^31. Distances are then exact, so the
/// neighbour order equals the floating-point path.
std::optional<std::vector<std::int16_t>> as_int16(const std::vector<double>& a, const std::vector<double>& b,
                                                  std::size_t dims) {
  double lo = 0.0, hi = 0.0;
  for (const auto* v : {&a, &b}) {
    for (const double x : *v) {
      if (x != std::trunc(x) || std::abs(x) > 16000.0) return std::nullopt;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if ((hi - lo) * (hi - lo) * static_cast<double>(dims) >= 2147483647.0) return std::nullopt;
  std::vector<std::int16_t> out(a.size() + b.size());
  std::transform(a.begin(), a.end(), out.begin(), [](double x) { return static_cast<std::int16_t>(x); });
  std::transform(b.begin(), b.end(), out.begin() + static_cast<std::ptrdiff_t>(a.size()),
                 [](double x) { return static_cast<std::int16_t>(x); });
  return out;
}

inline double squared_distance(const double* row, const double* query, std::size_t dims) {
  double d2 = 0.0;
  for (std::size_t c = 0; c < dims; ++c) {
    const double diff = row[c] - query[c];
    d2 += diff * diff;
  }
  return d2;
}

// Integer sums are exact, so every clone returns the same value.
__attribute__((target_clones("avx2", "default"))) double squared_distance(const std::int16_t* row,
                                                                          const std::int16_t* query,
                                                                          std::size_t dims) {
  std::int32_t d2 = 0;
  for (std::size_t c = 0; c < dims; ++c) {
    const std::int32_t diff = static_cast<std::int32_t>(row[c]) - query[c];
    d2 += diff * diff;
  }
  return static_cast<double>(d2);
}

template <typename T>
Position knn(const FingerprintDataset& train, const T* projected, const T* query, std::size_t dims,
             std::size_t k) {
  const std::size_t m = train.num_samples();
  // sorted ascending, at most k entries
  std::vector<Neighbour> best;
  best.reserve(k + 1);
  for (std::size_t l = 0; l < m; ++l) {
    const Neighbour cand{squared_distance(projected + l * dims, query, dims), l};
    if (best.size() == k && !(cand < best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
    if (best.size() > k) best.pop_back();
  }

  Position out;
  std::map<int, std::size_t> votes;
  for (const auto& nb : best) {
    out.latitude += train.latitude[nb.index];
    out.longitude += train.longitude[nb.index];
    ++votes[train.floor[nb.index]];
  }
  out.latitude /= static_cast<double>(best.size());
  out.longitude /= static_cast<double>(best.size());
  std::size_t top = 0;
  for (const auto& [floor, count] : votes) top = std::max(top, count);
  for (const auto& nb : best) {
    if (votes[train.floor[nb.index]] == top) {
      out.floor = train.floor[nb.index];
      break;
    }
  }
  return out;
}

}  // namespace

Position predict(const FingerprintDataset& train, std::span<const double> query_rss,
                 std::span<const std::size_t> subset, const LocalizerConfig& cfg) {
  check_inputs(train, subset, cfg);
  if (query_rss.size() != train.num_aps()) throw ConfigError("query length does not match AP count");
  const std::vector<double> projected = project(train, subset);
  std::vector<double> query(subset.size());
  for (std::size_t c = 0; c < subset.size(); ++c) query[c] = query_rss[subset[c]];
  return knn(train, projected.data(), query.data(), subset.size(), static_cast<std::size_t>(cfg.k_neighbors));
}

double error_3d(const Position& predicted, const Position& truth, double floor_height_m) {
  const double dlat = predicted.latitude - truth.latitude;
  const double dlon = predicted.longitude - truth.longitude;
  const double dz = static_cast<double>(predicted.floor - truth.floor) * floor_height_m;
  return std::sqrt(dlat * dlat + dlon * dlon + dz * dz);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

LocalizationReport evaluate(const DatasetSplit& split, std::span<const std::size_t> subset,
                            const LocalizerConfig& cfg) {
  const FingerprintDataset& train = split.train;
  const FingerprintDataset& test = split.test;
  check_inputs(train, subset, cfg);
  if (test.num_aps() != train.num_aps()) throw ConfigError("train and test AP counts differ");
  if (test.num_samples() == 0) throw DataError("test partition is empty");

  const std::vector<double> projected = project(train, subset);
  const std::vector<double> queries = project(test, subset);
  const std::size_t dims = subset.size();
  const std::size_t q = test.num_samples();

  LocalizationReport report;
  report.per_query_error_m.assign(q, 0.0);
  std::vector<char> hits(q, 0);
  const auto k = static_cast<std::size_t>(cfg.k_neighbors);
  const auto packed = as_int16(projected, queries, dims);
  parallel_for(q, [&](std::size_t t) {
    const Position p = packed ? knn(train, packed->data(), packed->data() + projected.size() + t * dims, dims, k)
                              : knn(train, projected.data(), queries.data() + t * dims, dims, k);
    const Position predicted{train.transform.lat_to_metric(p.latitude),
                             train.transform.lon_to_metric(p.longitude), p.floor};
    const Position truth{test.transform.lat_to_metric(test.latitude[t]),
                         test.transform.lon_to_metric(test.longitude[t]), test.floor[t]};
    report.per_query_error_m[t] = error_3d(predicted, truth, cfg.floor_height_m);
    hits[t] = p.floor == test.floor[t];
  });
  report.floor_hit.assign(hits.begin(), hits.end());

  double sum = 0.0;
  for (const double e : report.per_query_error_m) sum += e;
  report.mean_error_m = sum / static_cast<double>(q);
  report.median_error_m = percentile(report.per_query_error_m, 50.0);
  report.p95_error_m = percentile(report.per_query_error_m, 95.0);
  report.floor_accuracy =
      static_cast<double>(std::count(hits.begin(), hits.end(), 1)) / static_cast<double>(q);
  report.num_aps_used = subset.size();
  report.num_aps_total = train.num_aps();
  report.reduction_fraction =
      1.0 - static_cast<double>(subset.size()) / static_cast<double>(train.num_aps());
  return report;
}

nlohmann::json to_json(const LocalizationReport& report, bool include_per_query) {
  nlohmann::json j = {
      {"num_queries", report.per_query_error_m.size()},
      {"mean_error_m", report.mean_error_m},
      {"median_error_m", report.median_error_m},
      {"p95_error_m", report.p95_error_m},
      {"floor_accuracy", report.floor_accuracy},
      {"num_aps_used", report.num_aps_used},
      {"num_aps_total", report.num_aps_total},
      {"reduction_fraction", report.reduction_fraction},
      {"floor_classifier", "knn-majority-vote"},
  };
  if (include_per_query) {
    j["per_query_error_m"] = report.per_query_error_m;
    std::vector<int> hits(report.floor_hit.begin(), report.floor_hit.end());
    j["floor_hit"] = hits;
  }
  return j;
}

void write_report_csv(const LocalizationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "index,error_m,floor_hit\n";
  char buf[40];
  for (std::size_t t = 0; t < report.per_query_error_m.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.17g", report.per_query_error_m[t]);
    out << t << ',' << buf << ',' << (report.floor_hit[t] ? 1 : 0) << '\n';
  }
}

}  // namespace apsel
