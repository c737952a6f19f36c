#include "apsel/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "apsel/error.hpp"
#include "apsel/parallel.hpp"

namespace apsel {

namespace {

// Column-major copy so per-AP passes stream contiguous memory.
std::vector<double> transpose(const FingerprintDataset& d) {
  const std::size_t m = d.num_samples();
  const std::size_t n = d.num_aps();
  std::vector<double> cols(m * n);
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t a = 0; a < n; ++a) cols[a * m + l] = d.rss[l * n + a];
  }
  return cols;
}

double column_mean(const double* col, std::size_t m) {
  double sum = 0.0;
  for (std::size_t l = 0; l < m; ++l) sum += col[l];
  return sum / static_cast<double>(m);
}

bool ever_detected(const double* col, std::size_t m, double not_detected) {
  for (std::size_t l = 0; l < m; ++l) {
    if (col[l] != not_detected) return true;
  }
  return false;
}

template <typename Score>
ImportanceVector per_ap(const FingerprintDataset& d, ImportanceMetric metric, Score score) {
  if (d.num_samples() == 0) throw InsufficientSamplesError("importance needs at least 1 sample");
  const std::size_t m = d.num_samples();
  const std::size_t n = d.num_aps();
  const std::vector<double> cols = transpose(d);

  ImportanceVector out;
  out.metric = metric;
  out.raw_scores.assign(n, 0.0);
  std::vector<char> active(n, 0);
  parallel_for(n, [&](std::size_t a) {
    const double* col = cols.data() + a * m;
    out.raw_scores[a] = score(col, m);
    if (metric == ImportanceMetric::Entropy || metric == ImportanceMetric::Variance) {
      active[a] = out.raw_scores[a] > 0.0;
    } else {
      // dBm means and maxima are never zero; use detection instead
      active[a] = ever_detected(col, m, d.not_detected_value);
    }
  });
  out.active.assign(active.begin(), active.end());
  out.scores = min_max_normalize(out.raw_scores);
  return out;
}

}  // namespace

std::string_view to_string(ImportanceMetric metric) {
  switch (metric) {
    case ImportanceMetric::Entropy: return "entropy";
    case ImportanceMetric::Variance: return "variance";
    case ImportanceMetric::Average: return "average";
    case ImportanceMetric::Max: return "max";
  }
  return "unknown";
}

ImportanceMetric parse_metric(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "entropy") return ImportanceMetric::Entropy;
  if (lower == "variance") return ImportanceMetric::Variance;
  if (lower == "average") return ImportanceMetric::Average;
  if (lower == "max") return ImportanceMetric::Max;
  throw ConfigError("unknown importance metric '" + std::string(name) + "'");
}

std::vector<double> min_max_normalize(const std::vector<double>& raw) {
  std::vector<double> out(raw.size(), 0.0);
  if (raw.empty()) return out;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - *lo) / range;
  return out;
}

ImportanceVector importance_entropy(const FingerprintDataset& d) {
  return per_ap(d, ImportanceMetric::Entropy, [](const double* col, std::size_t m) {
    std::vector<long> bins(m);
    for (std::size_t l = 0; l < m; ++l) bins[l] = std::lround(col[l]);
    std::sort(bins.begin(), bins.end());
    double h = 0.0;
    const double total = static_cast<double>(m);
    for (std::size_t l = 0; l < m;) {
      std::size_t r = l;
      while (r < m && bins[r] == bins[l]) ++r;
      const double p = static_cast<double>(r - l) / total;
      if (p < 1.0) h -= p * std::log2(p);
      l = r;
    }
    return h;
  });
}

ImportanceVector importance_variance(const FingerprintDataset& d) {
  if (d.num_samples() < 2) {
    throw InsufficientSamplesError("variance importance needs at least 2 samples");
  }
  return per_ap(d, ImportanceMetric::Variance, [](const double* col, std::size_t m) {
    const double mean = column_mean(col, m);
    double ss = 0.0;
    for (std::size_t l = 0; l < m; ++l) ss += (col[l] - mean) * (col[l] - mean);
    return ss / static_cast<double>(m - 1);
  });
}

ImportanceVector importance_average(const FingerprintDataset& d) {
  return per_ap(d, ImportanceMetric::Average,
                [](const double* col, std::size_t m) { return column_mean(col, m); });
}

ImportanceVector importance_max(const FingerprintDataset& d) {
  return per_ap(d, ImportanceMetric::Max, [](const double* col, std::size_t m) {
    return *std::max_element(col, col + m);
  });
}

ImportanceVector importance(const FingerprintDataset& d, ImportanceMetric metric) {
  switch (metric) {
    case ImportanceMetric::Entropy: return importance_entropy(d);
    case ImportanceMetric::Variance: return importance_variance(d);
    case ImportanceMetric::Average: return importance_average(d);
    case ImportanceMetric::Max: return importance_max(d);
  }
  throw ConfigError("unknown importance metric");
}

RedundancyMatrix redundancy(const FingerprintDataset& d, const ImportanceVector& imp) {
  const std::size_t n = d.num_aps();
  const std::size_t m = d.num_samples();
  if (imp.size() != n || imp.active.size() != n) {
    throw ConfigError("importance vector does not match dataset AP count");
  }

  RedundancyMatrix red;
  red.n = n;
  red.values.assign(n * n, 0.0);
  red.active_mask = imp.active;

  // Centered columns and their sums of squares.
  std::vector<double> centered = transpose(d);
  std::vector<double> ss(n, 0.0);
  parallel_for(n, [&](std::size_t a) {
    double* col = centered.data() + a * m;
    const double mean = column_mean(col, m);
    double acc = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      col[l] -= mean;
      acc += col[l] * col[l];
    }
    ss[a] = acc;
  });

  std::vector<std::size_t> active;
  for (std::size_t a = 0; a < n; ++a) {
    if (imp.active[a]) active.push_back(a);
  }

  // Row i of the upper triangle is owned by one task; the mirror write to
  // (j, i) touches a distinct cell for every (i, j).
  parallel_for(active.size(), [&](std::size_t p) {
    const std::size_t i = active[p];
    red.values[i * n + i] = 1.0;
    const double* ci = centered.data() + i * m;
    for (std::size_t q = p + 1; q < active.size(); ++q) {
      const std::size_t j = active[q];
      double r = 0.0;
      if (ss[i] > 0.0 && ss[j] > 0.0) {
        const double* cj = centered.data() + j * m;
        double dot = 0.0;
        for (std::size_t l = 0; l < m; ++l) dot += ci[l] * cj[l];
        r = std::min(1.0, std::fabs(dot / std::sqrt(ss[i] * ss[j])));
      }
      red.values[i * n + j] = r;
      red.values[j * n + i] = r;
    }
  });
  return red;
}

void write_importance_csv(const FingerprintDataset& d, const ImportanceVector& imp,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "ap_id,raw,normalized,active\n";
  char buf[96];
  for (std::size_t a = 0; a < imp.size(); ++a) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d", imp.raw_scores[a], imp.scores[a],
                  imp.active[a] ? 1 : 0);
    out << d.ap_ids[a] << ',' << buf << '\n';
  }
}

void write_redundancy_csv(const FingerprintDataset& d, const RedundancyMatrix& red,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "ap_id";
  for (const auto& id : d.ap_ids) out << ',' << id;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < red.n; ++i) {
    out << d.ap_ids[i];
    for (std::size_t j = 0; j < red.n; ++j) {
      std::snprintf(buf, sizeof buf, "%.10g", red(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace apsel
