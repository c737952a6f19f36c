#include "apsel/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "apsel/analysis.hpp"
#include "apsel/error.hpp"

namespace apsel {

namespace {

const std::set<std::string> kSweepParameters{"alpha", "eta",     "k",       "metric", "beta",
                                             "gamma", "sweeps", "reads", "trotter", "knn"};

double parse_real(const std::string& field, const std::string& value) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(field + ": '" + value + "' is not a number");
  }
  return v;
}

int parse_int(const std::string& field, const std::string& value) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(field + ": '" + value + "' is not an integer");
  }
  return v;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string report_csv(const LocalizationReport& r) {
  std::string out = "index,error_m,floor_hit\n";
  char buf[64];
  for (std::size_t t = 0; t < r.per_query_error_m.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", t, r.per_query_error_m[t], r.floor_hit[t] ? 1 : 0);
    out += buf;
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (const double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string artifact_stem(const TrialRecord& r) {
  return std::string(to_string(r.sampler)) + "_" + std::to_string(r.trial);
}

std::filesystem::path cell_dir(const std::string& parameter, const std::string& value) {
  if (parameter == "none") return {};
  return parameter + "=" + value;
}

nlohmann::json selection_artifact(const TrialRecord& r, bool include_timing) {
  nlohmann::json j = to_json(r.selection, include_timing);
  j["target_k"] = r.target_k;
  j["trial"] = r.trial;
  j["seed"] = r.seed;
  j["parameter"] = r.parameter;
  j["value"] = r.value;
  j["reference_energy"] = r.reference_energy;
  j["success_probability"] = r.success_probability;
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(qubo.alpha >= 0.0 && qubo.alpha <= 1.0)) throw ConfigError("alpha: must lie in [0, 1]");
  if (!(qubo.eta > 0.0) || !std::isfinite(qubo.eta)) throw ConfigError("eta: must be positive");
  if (qubo.k < 1) throw ConfigError("budget-k: must be at least 1");
  if (trials < 1) throw ConfigError("trials: must be at least 1");
  if (samplers.empty()) throw ConfigError("sampler: at least one sampler is required");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test-fraction: must lie in (0, 1)");
  if (!(tts_target > 0.0 && tts_target < 1.0)) throw ConfigError("tts-target: must lie in (0, 1)");
  if (localizer.k_neighbors < 1) throw ConfigError("knn: must be at least 1");
  if (!(localizer.floor_height_m >= 0.0)) throw ConfigError("floor-height: must be non-negative");
  for (const auto s : samplers) {
    if (s == SamplerKind::SA || s == SamplerKind::SQA) {
      try {
        anneal.validate(s);
      } catch (const ConfigError& e) {
        throw ConfigError(std::string(to_string(s)) + ": " + e.what());
      }
    }
  }
  if (sweep) {
    if (!kSweepParameters.contains(sweep->parameter)) {
      throw ConfigError("sweep: unknown parameter '" + sweep->parameter + "'");
    }
    if (sweep->values.empty()) throw ConfigError("sweep: no values given");
    for (const auto& v : sweep->values) {
      ExperimentConfig probe = *this;
      probe.sweep.reset();
      apply_parameter(probe, sweep->parameter, v);
      probe.validate();
    }
  }
}

void apply_parameter(ExperimentConfig& cfg, const std::string& parameter, const std::string& value) {
  if (parameter == "alpha") {
    cfg.qubo.alpha = parse_real(parameter, value);
  } else if (parameter == "eta") {
    cfg.qubo.eta = parse_real(parameter, value);
  } else if (parameter == "k") {
    cfg.qubo.k = parse_int(parameter, value);
  } else if (parameter == "metric") {
    cfg.qubo.metric = parse_metric(value);
  } else if (parameter == "beta") {
    cfg.anneal.beta = parse_real(parameter, value);
  } else if (parameter == "gamma") {
    cfg.anneal.gamma = parse_real(parameter, value);
  } else if (parameter == "sweeps") {
    cfg.anneal.num_sweeps = parse_int(parameter, value);
  } else if (parameter == "reads") {
    cfg.anneal.num_reads = parse_int(parameter, value);
  } else if (parameter == "trotter") {
    cfg.anneal.trotter_slices = parse_int(parameter, value);
  } else if (parameter == "knn") {
    cfg.localizer.k_neighbors = parse_int(parameter, value);
  } else {
    throw ConfigError("unknown sweep parameter '" + parameter +
                      "' (expected alpha|eta|k|metric|beta|gamma|sweeps|reads|trotter|knn)");
  }
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> paths;
  for (const auto& p : cfg.dataset_paths) paths.push_back(p.string());
  std::vector<std::string> samplers;
  for (const auto s : cfg.samplers) samplers.emplace_back(to_string(s));
  nlohmann::json j = {
      {"dataset_paths", paths},
      {"ingest",
       {{"ap_prefix", cfg.ingest.ap_prefix},
        {"longitude_column", cfg.ingest.longitude_column},
        {"latitude_column", cfg.ingest.latitude_column},
        {"floor_column", cfg.ingest.floor_column},
        {"not_detected_value", cfg.ingest.not_detected_value}}},
      {"metric", std::string(to_string(cfg.qubo.metric))},
      {"alpha", cfg.qubo.alpha},
      {"eta", cfg.qubo.eta},
      {"k", cfg.qubo.k},
      {"anneal", to_json(cfg.anneal)},
      {"localizer", {{"k_neighbors", cfg.localizer.k_neighbors}, {"floor_height_m", cfg.localizer.floor_height_m}}},
      {"samplers", samplers},
      {"trials", cfg.trials},
      {"base_seed", cfg.base_seed},
      {"test_fraction", cfg.test_fraction},
      {"tts_target", cfg.tts_target},
  };
  if (cfg.sweep) j["sweep"] = {{"parameter", cfg.sweep->parameter}, {"values", cfg.sweep->values}};
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    for (const auto& p : j.value("dataset_paths", std::vector<std::string>{})) cfg.dataset_paths.emplace_back(p);
    if (j.contains("ingest")) {
      const auto& in = j.at("ingest");
      cfg.ingest.ap_prefix = in.value("ap_prefix", cfg.ingest.ap_prefix);
      cfg.ingest.longitude_column = in.value("longitude_column", cfg.ingest.longitude_column);
      cfg.ingest.latitude_column = in.value("latitude_column", cfg.ingest.latitude_column);
      cfg.ingest.floor_column = in.value("floor_column", cfg.ingest.floor_column);
      cfg.ingest.not_detected_value = in.value("not_detected_value", cfg.ingest.not_detected_value);
    }
    if (j.contains("metric")) cfg.qubo.metric = parse_metric(j.at("metric").get<std::string>());
    cfg.qubo.alpha = j.value("alpha", cfg.qubo.alpha);
    cfg.qubo.eta = j.value("eta", cfg.qubo.eta);
    cfg.qubo.k = j.value("k", cfg.qubo.k);
    if (j.contains("anneal")) cfg.anneal = anneal_config_from_json(j.at("anneal"));
    if (j.contains("localizer")) {
      cfg.localizer.k_neighbors = j.at("localizer").value("k_neighbors", cfg.localizer.k_neighbors);
      cfg.localizer.floor_height_m = j.at("localizer").value("floor_height_m", cfg.localizer.floor_height_m);
    }
    if (j.contains("samplers")) {
      cfg.samplers.clear();
      for (const auto& s : j.at("samplers")) cfg.samplers.push_back(parse_sampler(s.get<std::string>()));
    }
    cfg.trials = j.value("trials", cfg.trials);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
    cfg.tts_target = j.value("tts_target", cfg.tts_target);
    if (j.contains("sweep")) {
      cfg.sweep = SweepAxis{j.at("sweep").at("parameter").get<std::string>(),
                            j.at("sweep").at("values").get<std::vector<std::string>>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  return cfg;
}

FingerprintDataset load_experiment_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_paths.empty()) throw ConfigError("dataset: no dataset path given");
  FingerprintDataset d = load_csv(cfg.dataset_paths, cfg.ingest);
  // A file written by write_csv carries its transform in a sidecar.
  if (cfg.dataset_paths.size() == 1) {
    auto sidecar = cfg.dataset_paths.front();
    sidecar += ".json";
    if (std::filesystem::exists(sidecar)) read_transform_json(d, sidecar);
  }
  return normalize_labels(d);
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& records) {
  // Cells in first-appearance order of (value, sampler).
  std::vector<std::pair<std::string, SamplerKind>> order;
  std::map<std::pair<std::string, SamplerKind>, std::vector<const TrialRecord*>> cells;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.value, r.sampler);
    if (!cells.contains(key)) order.push_back(key);
    cells[key].push_back(&r);
  }

  std::vector<AggregateRow> rows;
  for (const auto& key : order) {
    const auto& group = cells[key];
    AggregateRow row;
    row.parameter = group.front()->parameter;
    row.value = key.first;
    row.sampler = key.second;
    row.trials = static_cast<int>(group.size());
    row.achieved_k_min = group.front()->selection.achieved_k;
    std::vector<double> k, energy, ps, tts_values, solve, mean_err, median_err, p95_err, floor_acc, used, red;
    for (const TrialRecord* r : group) {
      const std::size_t ak = r->selection.achieved_k;
      k.push_back(static_cast<double>(ak));
      row.achieved_k_min = std::min(row.achieved_k_min, ak);
      row.achieved_k_max = std::max(row.achieved_k_max, ak);
      if (ak == static_cast<std::size_t>(r->target_k)) ++row.k_hit_trials;
      energy.push_back(r->selection.best_energy);
      ps.push_back(r->success_probability);
      if (r->selection.tts_seconds) tts_values.push_back(*r->selection.tts_seconds);
      solve.push_back(r->selection.solve_seconds);
      mean_err.push_back(r->report.mean_error_m);
      median_err.push_back(r->report.median_error_m);
      p95_err.push_back(r->report.p95_error_m);
      floor_acc.push_back(r->report.floor_accuracy);
      used.push_back(static_cast<double>(r->report.num_aps_used));
      red.push_back(r->report.reduction_fraction);
    }
    row.achieved_k_mean = mean_of(k);
    row.best_energy_mean = mean_of(energy);
    row.success_probability_mean = mean_of(ps);
    row.tts_seconds_mean = mean_of(tts_values);
    row.tts_defined_trials = static_cast<int>(tts_values.size());
    row.solve_seconds_mean = mean_of(solve);
    row.mean_error_m_mean = mean_of(mean_err);
    row.mean_error_m_std = sample_std(mean_err);
    row.median_error_m_mean = mean_of(median_err);
    row.p95_error_m_mean = mean_of(p95_err);
    row.floor_accuracy_mean = mean_of(floor_acc);
    row.floor_accuracy_std = sample_std(floor_acc);
    row.num_aps_used_mean = mean_of(used);
    row.reduction_fraction_mean = mean_of(red);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> aggregate_columns() {
  return {"parameter",          "value",
          "sampler",            "trials",
          "achieved_k_mean",    "achieved_k_min",
          "achieved_k_max",     "k_hit_trials",
          "best_energy_mean",   "success_probability_mean",
          "tts_seconds_mean",   "tts_defined_trials",
          "solve_seconds_mean", "mean_error_m_mean",
          "mean_error_m_std",   "median_error_m_mean",
          "p95_error_m_mean",   "floor_accuracy_mean",
          "floor_accuracy_std", "num_aps_used_mean",
          "reduction_fraction_mean"};
}

void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::filesystem::path& path) {
  std::string out;
  const auto cols = aggregate_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) out += (c ? "," : "") + cols[c];
  out += '\n';
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%s,%d,%.10g,%zu,%zu,%d,%.10g,%.10g,%.10g,%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.parameter.c_str(), r.value.c_str(), std::string(to_string(r.sampler)).c_str(), r.trials,
                  r.achieved_k_mean, r.achieved_k_min, r.achieved_k_max, r.k_hit_trials, r.best_energy_mean,
                  r.success_probability_mean, r.tts_seconds_mean, r.tts_defined_trials, r.solve_seconds_mean,
                  r.mean_error_m_mean, r.mean_error_m_std, r.median_error_m_mean, r.p95_error_m_mean,
                  r.floor_accuracy_mean, r.floor_accuracy_std, r.num_aps_used_mean, r.reduction_fraction_mean);
    out += buf;
  }
  write_atomic(path, out);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const FingerprintDataset& dataset) {
  cfg.validate();
  const std::string parameter = cfg.sweep ? cfg.sweep->parameter : "none";
  const std::vector<std::string> values = cfg.sweep ? cfg.sweep->values : std::vector<std::string>{""};
  const std::size_t n = dataset.num_aps();

  ExperimentResult result;
  result.tts_reference = n <= kMaxExactVariables ? "exact" : "best-known";
  std::vector<std::uint64_t> seeds;
  std::map<std::string, double> reference;  // instance key -> energy

  // Trial-major so the split and analysis are computed once per trial.
  std::vector<std::vector<TrialRecord>> by_value(values.size());
  for (int t = 0; t < cfg.trials; ++t) {
    const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(t);
    seeds.push_back(seed);
    const DatasetSplit parts = split(dataset, cfg.test_fraction, seed);
    std::map<ImportanceMetric, std::pair<ImportanceVector, RedundancyMatrix>> analysis;
    std::map<std::pair<int, double>, LocalizationReport> baseline;

    for (std::size_t v = 0; v < values.size(); ++v) {
      ExperimentConfig cell = cfg;
      if (cfg.sweep) apply_parameter(cell, parameter, values[v]);
      auto it = analysis.find(cell.qubo.metric);
      if (it == analysis.end()) {
        ImportanceVector imp = importance(parts.train, cell.qubo.metric);
        RedundancyMatrix red = redundancy(parts.train, imp);
        it = analysis.emplace(cell.qubo.metric, std::make_pair(std::move(imp), std::move(red))).first;
      }
      const QuboModel model = build_qubo(it->second.first, it->second.second, cell.qubo);
      char key_buf[160];
      std::snprintf(key_buf, sizeof key_buf, "%d|%.17g|%.17g|%d|%s", t, cell.qubo.alpha, cell.qubo.eta,
                    cell.qubo.k, std::string(to_string(cell.qubo.metric)).c_str());
      const std::string instance = key_buf;
      if (n <= kMaxExactVariables && !reference.contains(instance)) {
        reference[instance] = brute_force(model).selection.best_energy;
      }

      for (const SamplerKind sampler : cell.samplers) {
        TrialRecord rec;
        rec.parameter = parameter;
        rec.value = values[v];
        rec.sampler = sampler;
        rec.trial = t;
        rec.seed = seed;
        rec.target_k = cell.qubo.k;
        if (sampler == SamplerKind::AllAps) {
          BitVector all(n, 1);
          rec.selection.selected = selected_indices(all);
          rec.selection.achieved_k = n;
          rec.selection.num_aps = n;
          rec.selection.best_energy = energy(model, all);
          rec.selection.sampler = SamplerKind::AllAps;
          const auto bkey = std::make_pair(cell.localizer.k_neighbors, cell.localizer.floor_height_m);
          auto b = baseline.find(bkey);
          if (b == baseline.end()) {
            b = baseline.emplace(bkey, evaluate(parts, rec.selection.selected, cell.localizer)).first;
          }
          rec.report = b->second;
        } else {
          AnnealConfig acfg = cell.anneal;
          acfg.seed = seed;
          SolveOutcome outcome = solve(model, sampler, acfg);
          rec.selection = std::move(outcome.selection);
          rec.samples = std::move(outcome.samples);
          if (rec.selection.selected.empty()) {
            throw SolverError(std::string(to_string(sampler)) + " selected no APs (trial " + std::to_string(t) +
                              "); localization is undefined");
          }
          rec.report = evaluate(parts, rec.selection.selected, cell.localizer);
          if (n > kMaxExactVariables) {
            auto [r, inserted] = reference.emplace(instance, rec.selection.best_energy);
            if (!inserted) r->second = std::min(r->second, rec.selection.best_energy);
          }
        }
        by_value[v].push_back(std::move(rec));
      }
    }
  }

  // Barrier: every sampler has run, so best-known references are final.
  for (std::size_t v = 0; v < values.size(); ++v) {
    ExperimentConfig cell = cfg;
    if (cfg.sweep) apply_parameter(cell, parameter, values[v]);
    for (auto& rec : by_value[v]) {
      char key_buf[160];
      std::snprintf(key_buf, sizeof key_buf, "%d|%.17g|%.17g|%d|%s", rec.trial, cell.qubo.alpha, cell.qubo.eta,
                    cell.qubo.k, std::string(to_string(cell.qubo.metric)).c_str());
      const auto ref = reference.find(key_buf);
      rec.reference_energy = ref != reference.end() ? ref->second : rec.selection.best_energy;
      if (rec.samples) {
        rec.success_probability = success_probability(*rec.samples, rec.reference_energy);
        rec.selection.tts_seconds = tts(*rec.samples, rec.reference_energy, cfg.tts_target);
      } else if (rec.sampler == SamplerKind::Exact) {
        rec.success_probability = 1.0;
      }
    }
  }

  // Records ordered by value, then sampler order, then trial.
  for (auto& group : by_value) {
    std::stable_sort(group.begin(), group.end(), [&](const TrialRecord& a, const TrialRecord& b) {
      const auto pos = [&](SamplerKind s) {
        return std::find(cfg.samplers.begin(), cfg.samplers.end(), s) - cfg.samplers.begin();
      };
      if (pos(a.sampler) != pos(b.sampler)) return pos(a.sampler) < pos(b.sampler);
      return a.trial < b.trial;
    });
    for (auto& r : group) result.records.push_back(std::move(r));
  }
  result.aggregate = aggregate(result.records);

  nlohmann::json manifest = {
      {"config", to_json(cfg)},
      {"seeds", seeds},
      {"tts_reference", result.tts_reference},
      {"floor_classifier", "knn-majority-vote"},
      {"nondeterministic_fields",
       {"selection_*.json: solve_seconds, tts_seconds", "samples_*.json: timing",
        "aggregate.csv: tts_seconds_mean, solve_seconds_mean"}},
  };
  nlohmann::json artifacts = nlohmann::json::object();
  nlohmann::json record_index = nlohmann::json::array();
  const bool write = !cfg.output_dir.empty();
  if (write) std::filesystem::create_directories(cfg.output_dir);

  for (const auto& rec : result.records) {
    const std::filesystem::path sub = cell_dir(rec.parameter, rec.value);
    const std::string stem = artifact_stem(rec);
    const auto rel = [&](const std::string& name) { return (sub / name).generic_string(); };

    const std::string sel_name = rel("selection_" + stem + ".json");
    const std::string loc_name = rel("localization_" + stem + ".json");
    const std::string csv_name = rel("localization_" + stem + ".csv");
    artifacts[sel_name] = sha256_hex(selection_artifact(rec, false).dump());
    artifacts[loc_name] = sha256_hex(to_json(rec.report, true).dump());
    const std::string csv = report_csv(rec.report);
    artifacts[csv_name] = sha256_hex(csv);
    nlohmann::json entry = {{"parameter", rec.parameter}, {"value", rec.value},
                            {"sampler", std::string(to_string(rec.sampler))},
                            {"trial", rec.trial}, {"seed", rec.seed},
                            {"selection", sel_name}, {"localization", loc_name}};
    std::string samples_name;
    if (rec.samples) {
      samples_name = rel("samples_" + stem + ".json");
      artifacts[samples_name] = sha256_hex(to_json(*rec.samples, false).dump());
      entry["samples"] = samples_name;
    }
    record_index.push_back(entry);

    if (write) {
      std::filesystem::create_directories(cfg.output_dir / sub);
      write_atomic(cfg.output_dir / sel_name, selection_artifact(rec, true).dump(2) + "\n");
      write_atomic(cfg.output_dir / loc_name, to_json(rec.report, true).dump() + "\n");
      write_atomic(cfg.output_dir / csv_name, csv);
      if (rec.samples) write_atomic(cfg.output_dir / samples_name, to_json(*rec.samples, true).dump() + "\n");
    }
  }
  manifest["artifacts"] = artifacts;
  manifest["records"] = record_index;
  result.manifest = manifest;
  if (write) {
    write_aggregate_csv(result.aggregate, cfg.output_dir / "aggregate.csv");
    write_atomic(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  }
  return result;
}

ExperimentResult run(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, load_experiment_dataset(cfg));
}

std::vector<AggregateRow> sweep(const ExperimentConfig& cfg, const FingerprintDataset& dataset) {
  if (!cfg.sweep) throw ConfigError("sweep: no sweep axis configured");
  return run_experiment(cfg, dataset).aggregate;
}

std::vector<AggregateRow> recompute_aggregate(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  std::vector<TrialRecord> records;
  for (const auto& entry : manifest.at("records")) {
    const auto sel = nlohmann::json::parse(read_file(dir / entry.at("selection").get<std::string>()));
    const auto loc = nlohmann::json::parse(read_file(dir / entry.at("localization").get<std::string>()));
    TrialRecord r;
    r.parameter = sel.at("parameter").get<std::string>();
    r.value = sel.at("value").get<std::string>();
    r.sampler = parse_sampler(sel.at("sampler").get<std::string>());
    r.trial = sel.at("trial").get<int>();
    r.target_k = sel.at("target_k").get<int>();
    r.selection.achieved_k = sel.at("achieved_k").get<std::size_t>();
    r.selection.best_energy = sel.at("best_energy").get<double>();
    r.selection.solve_seconds = sel.value("solve_seconds", 0.0);
    if (sel.contains("tts_seconds") && !sel.at("tts_seconds").is_null()) {
      r.selection.tts_seconds = sel.at("tts_seconds").get<double>();
    }
    r.success_probability = sel.at("success_probability").get<double>();

    // Summary statistics come from the per-query arrays, not the stored summary.
    const auto errors = loc.at("per_query_error_m").get<std::vector<double>>();
    const auto hits = loc.at("floor_hit").get<std::vector<int>>();
    r.report.per_query_error_m = errors;
    r.report.mean_error_m = mean_of(errors);
    r.report.median_error_m = percentile(errors, 50.0);
    r.report.p95_error_m = percentile(errors, 95.0);
    r.report.floor_accuracy = hits.empty() ? 0.0
                                           : static_cast<double>(std::count(hits.begin(), hits.end(), 1)) /
                                                 static_cast<double>(hits.size());
    r.report.num_aps_used = loc.at("num_aps_used").get<std::size_t>();
    r.report.num_aps_total = loc.at("num_aps_total").get<std::size_t>();
    r.report.reduction_fraction =
        1.0 - static_cast<double>(r.report.num_aps_used) / static_cast<double>(r.report.num_aps_total);
    records.push_back(std::move(r));
  }
  return aggregate(records);
}

std::vector<std::string> replay_manifest(const std::filesystem::path& manifest_path,
                                         const std::filesystem::path& output_dir) {
  const auto manifest = nlohmann::json::parse(read_file(manifest_path));
  ExperimentConfig cfg = experiment_config_from_json(manifest.at("config"));
  cfg.output_dir = output_dir;
  const ExperimentResult rerun = run(cfg);
  std::vector<std::string> mismatched;
  const auto& expected = manifest.at("artifacts");
  const auto& actual = rerun.manifest.at("artifacts");
  for (const auto& [name, hash] : expected.items()) {
    if (!actual.contains(name) || actual.at(name) != hash) mismatched.push_back(name);
  }
  for (const auto& [name, hash] : actual.items()) {
    if (!expected.contains(name)) mismatched.push_back(name);
  }
  return mismatched;
}

}  // namespace apsel
