// apsel: budget-constrained AP selection pipeline.
//
//   apsel ingest   --dataset F [--dataset F2] --out DIR
//   apsel analyze  --dataset F --metric M --out DIR
//   apsel build    --dataset F --alpha A --eta E --budget-k K --out DIR
//   apsel solve    (--qubo Q | --dataset F ...) --sampler S --out DIR
//   apsel evaluate --dataset F (--selection S | --sampler all-aps) --out DIR
//   apsel run      --dataset F [--sampler S ...] --trials T --out DIR
//   apsel sweep    --dataset F --param P --values V1,V2,.. --out DIR
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 solver failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "apsel/analysis.hpp"
#include "apsel/anneal.hpp"
#include "apsel/dataset.hpp"
#include "apsel/error.hpp"
#include "apsel/experiment.hpp"
#include "apsel/localize.hpp"
#include "apsel/qubo.hpp"

namespace fs = std::filesystem;
using namespace apsel;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitSolver = 4;

struct Options {
  std::vector<std::string> datasets;
  std::string metric = "entropy";
  double alpha = 0.8;
  double eta = 2.0;
  int budget_k = 20;
  std::vector<std::string> samplers;
  int reads = 1000;
  int sweeps = 1000;
  double beta = 10.0;
  double gamma = 1.0;
  int trotter = 8;
  std::uint64_t seed = 1;
  int trials = 10;
  double test_fraction = 0.2;
  int knn = 3;
  double floor_height = 3.0;
  std::string out = "apsel-out";
  std::string qubo_path;
  std::string selection_path;
  std::string param;
  std::vector<std::string> values;
  std::string manifest;
};

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ExperimentConfig to_config(const Options& o) {
  ExperimentConfig cfg;
  for (const auto& d : o.datasets) cfg.dataset_paths.emplace_back(d);
  cfg.qubo.metric = parse_metric(o.metric);
  cfg.qubo.alpha = o.alpha;
  cfg.qubo.eta = o.eta;
  cfg.qubo.k = o.budget_k;
  cfg.anneal.num_reads = o.reads;
  cfg.anneal.num_sweeps = o.sweeps;
  cfg.anneal.beta = o.beta;
  cfg.anneal.gamma = o.gamma;
  cfg.anneal.trotter_slices = o.trotter;
  cfg.anneal.seed = o.seed;
  cfg.localizer.k_neighbors = o.knn;
  cfg.localizer.floor_height_m = o.floor_height;
  if (!o.samplers.empty()) {
    cfg.samplers.clear();
    for (const auto& s : o.samplers) cfg.samplers.push_back(parse_sampler(s));
  }
  cfg.trials = o.trials;
  cfg.base_seed = o.seed;
  cfg.test_fraction = o.test_fraction;
  cfg.output_dir = o.out;
  return cfg;
}

SamplerKind single_sampler(const Options& o, SamplerKind fallback) {
  if (o.samplers.empty()) return fallback;
  if (o.samplers.size() > 1) throw ConfigError("sampler: this subcommand takes a single sampler");
  return parse_sampler(o.samplers.front());
}

DatasetSplit load_split(const Options& o) {
  const ExperimentConfig cfg = to_config(o);
  return split(load_experiment_dataset(cfg), o.test_fraction, o.seed);
}

QuboModel build_from_options(const Options& o, const DatasetSplit& parts) {
  const ExperimentConfig cfg = to_config(o);
  const ImportanceVector imp = importance(parts.train, cfg.qubo.metric);
  const RedundancyMatrix red = redundancy(parts.train, imp);
  return build_qubo(imp, red, cfg.qubo);
}

void print_aggregate(const std::vector<AggregateRow>& rows) {
  std::printf("%-10s %-8s %-7s %8s %10s %10s %10s %12s\n", "param", "value", "sampler", "k", "mean_m",
              "floor_acc", "reduction", "tts_s");
  for (const auto& r : rows) {
    std::printf("%-10s %-8s %-7s %8.2f %10.3f %10.4f %10.4f %12.4g\n", r.parameter.c_str(), r.value.c_str(),
                std::string(to_string(r.sampler)).c_str(), r.achieved_k_mean, r.mean_error_m_mean,
                r.floor_accuracy_mean, r.reduction_fraction_mean, r.tts_seconds_mean);
  }
}

int cmd_ingest(const Options& o) {
  const FingerprintDataset d = load_experiment_dataset(to_config(o));
  fs::create_directories(o.out);
  write_csv(d, fs::path(o.out) / "dataset.csv");
  std::size_t detected = 0;
  for (const double v : d.rss) detected += v != d.not_detected_value;
  write_json(fs::path(o.out) / "ingest.json",
             {{"num_samples", d.num_samples()},
              {"num_aps", d.num_aps()},
              {"detected_fraction", static_cast<double>(detected) / static_cast<double>(d.rss.size())},
              {"not_detected_value", d.not_detected_value}});
  std::printf("%zu samples x %zu APs -> %s\n", d.num_samples(), d.num_aps(),
              (fs::path(o.out) / "dataset.csv").c_str());
  return 0;
}

int cmd_analyze(const Options& o) {
  const DatasetSplit parts = load_split(o);
  const ImportanceVector imp = importance(parts.train, parse_metric(o.metric));
  const RedundancyMatrix red = redundancy(parts.train, imp);
  fs::create_directories(o.out);
  write_importance_csv(parts.train, imp, fs::path(o.out) / "importance.csv");
  write_redundancy_csv(parts.train, red, fs::path(o.out) / "redundancy.csv");
  std::size_t active = 0;
  for (const bool a : imp.active) active += a;
  std::printf("%s importance over %zu training samples; %zu of %zu APs active\n", o.metric.c_str(),
              parts.train.num_samples(), active, imp.active.size());
  return 0;
}

int cmd_build(const Options& o) {
  const QuboModel model = build_from_options(o, load_split(o));
  fs::create_directories(o.out);
  write_qubo_json(model, fs::path(o.out) / "qubo.json");
  std::printf("QUBO with %zu variables, %zu couplings -> %s\n", model.linear.size(), model.quadratic.size(),
              (fs::path(o.out) / "qubo.json").c_str());
  return 0;
}

int cmd_solve(const Options& o) {
  QuboModel model;
  if (!o.qubo_path.empty()) {
    model = read_qubo_json(o.qubo_path);
  } else if (!o.datasets.empty()) {
    model = build_from_options(o, load_split(o));
  } else {
    throw ConfigError("solve: --qubo or --dataset is required");
  }
  const ExperimentConfig cfg = to_config(o);
  const SamplerKind sampler = single_sampler(o, SamplerKind::SQA);
  SolveOutcome outcome = solve(model, sampler, cfg.anneal);
  fs::create_directories(o.out);
  if (outcome.samples) {
    const double reference =
        model.linear.size() <= kMaxExactVariables ? brute_force(model).selection.best_energy
                                                  : outcome.selection.best_energy;
    outcome.selection.tts_seconds = tts(*outcome.samples, reference);
    write_samples_json(*outcome.samples, fs::path(o.out) / "samples.json");
  }
  if (outcome.selection.selected.empty()) {
    write_json(fs::path(o.out) / "selection.json", to_json(outcome.selection));
    throw SolverError("sampler returned an empty selection");
  }
  write_json(fs::path(o.out) / "selection.json", to_json(outcome.selection));
  std::printf("%s selected %zu of %zu APs, energy %.6f\n", std::string(to_string(sampler)).c_str(),
              outcome.selection.achieved_k, outcome.selection.num_aps, outcome.selection.best_energy);
  return 0;
}

int cmd_evaluate(const Options& o) {
  const DatasetSplit parts = load_split(o);
  std::vector<std::size_t> subset;
  if (!o.selection_path.empty()) {
    const auto j = read_json(o.selection_path);
    try {
      subset = j.at("selected").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(o.selection_path + ": " + e.what());
    }
  } else if (single_sampler(o, SamplerKind::AllAps) == SamplerKind::AllAps) {
    for (std::size_t a = 0; a < parts.train.num_aps(); ++a) subset.push_back(a);
  } else {
    throw ConfigError("evaluate: --selection is required unless --sampler all-aps");
  }
  const LocalizationReport report = evaluate(parts, subset, to_config(o).localizer);
  fs::create_directories(o.out);
  write_json(fs::path(o.out) / "localization.json", to_json(report, true));
  write_report_csv(report, fs::path(o.out) / "localization.csv");
  std::printf("mean %.3f m, median %.3f m, p95 %.3f m, floor accuracy %.4f, %zu/%zu APs\n",
              report.mean_error_m, report.median_error_m, report.p95_error_m, report.floor_accuracy,
              report.num_aps_used, report.num_aps_total);
  return 0;
}

int cmd_run(const Options& o, bool is_sweep) {
  if (!o.manifest.empty()) {
    const auto mismatched = replay_manifest(o.manifest, o.out);
    for (const auto& name : mismatched) std::printf("MISMATCH %s\n", name.c_str());
    std::printf("%s: %zu mismatched artifacts\n", o.manifest.c_str(), mismatched.size());
    return mismatched.empty() ? 0 : kExitSolver;
  }
  ExperimentConfig cfg = to_config(o);
  if (is_sweep) {
    if (o.param.empty()) throw ConfigError("sweep: --param is required");
    if (o.values.empty()) throw ConfigError("sweep: --values is required");
    cfg.sweep = SweepAxis{o.param, o.values};
  }
  const ExperimentResult result = run(cfg);
  print_aggregate(result.aggregate);
  std::printf("artifacts in %s (tts reference: %s)\n", cfg.output_dir.c_str(), result.tts_reference.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained WiFi access point selection"};
  app.require_subcommand(1);
  Options o;

  const auto add_dataset = [&](CLI::App* c) {
    c->add_option("--dataset", o.datasets, "Fingerprint CSV (repeatable; files are concatenated)");
  };
  const auto add_split = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "Seed for the split and samplers");
    c->add_option("--test-fraction", o.test_fraction, "Held-out fraction per floor");
  };
  const auto add_qubo = [&](CLI::App* c) {
    c->add_option("--metric", o.metric, "entropy|variance|average|max");
    c->add_option("--alpha", o.alpha, "Importance weight in [0, 1]");
    c->add_option("--eta", o.eta, "Cardinality penalty weight");
    c->add_option("--budget-k", o.budget_k, "Number of APs to select");
  };
  const auto add_anneal = [&](CLI::App* c) {
    c->add_option("--sampler", o.samplers, "sa|sqa|exact|all-aps");
    c->add_option("--reads", o.reads, "Independent anneals");
    c->add_option("--sweeps", o.sweeps, "Metropolis sweeps per read");
    c->add_option("--beta", o.beta, "Final inverse temperature");
    c->add_option("--gamma", o.gamma, "Initial transverse field (sqa)");
    c->add_option("--trotter", o.trotter, "Trotter slices (sqa)");
  };
  const auto add_localize = [&](CLI::App* c) {
    c->add_option("--knn", o.knn, "Neighbours for the kNN localizer");
    c->add_option("--floor-height", o.floor_height, "Meters per floor in the 3D error");
  };
  const auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory"); };

  auto* ingest = app.add_subcommand("ingest", "Load, validate and normalize fingerprint CSVs");
  add_dataset(ingest);
  add_out(ingest);

  auto* analyze = app.add_subcommand("analyze", "Importance and redundancy on the training split");
  add_dataset(analyze);
  add_split(analyze);
  analyze->add_option("--metric", o.metric, "entropy|variance|average|max");
  add_out(analyze);

  auto* build = app.add_subcommand("build", "Build the selection QUBO");
  add_dataset(build);
  add_split(build);
  add_qubo(build);
  add_out(build);

  auto* solve_cmd = app.add_subcommand("solve", "Sample a QUBO");
  add_dataset(solve_cmd);
  add_split(solve_cmd);
  add_qubo(solve_cmd);
  add_anneal(solve_cmd);
  solve_cmd->add_option("--qubo", o.qubo_path, "QUBO JSON written by build");
  add_out(solve_cmd);

  auto* eval_cmd = app.add_subcommand("evaluate", "Localize the test split with an AP subset");
  add_dataset(eval_cmd);
  add_split(eval_cmd);
  add_localize(eval_cmd);
  eval_cmd->add_option("--sampler", o.samplers, "all-aps evaluates the full AP set");
  eval_cmd->add_option("--selection", o.selection_path, "selection.json written by solve");
  add_out(eval_cmd);

  auto* run_cmd = app.add_subcommand("run", "Full experiment over trials and samplers");
  auto* sweep_cmd = app.add_subcommand("sweep", "Experiment over one swept parameter");
  for (auto* c : {run_cmd, sweep_cmd}) {
    add_dataset(c);
    add_split(c);
    add_qubo(c);
    add_anneal(c);
    add_localize(c);
    c->add_option("--trials", o.trials, "Independent trials (seed, seed+1, ...)");
    c->add_option("--manifest", o.manifest, "Replay a manifest.json and compare artifact hashes");
    add_out(c);
  }
  sweep_cmd->add_option("--param", o.param, "alpha|eta|k|metric|beta|gamma|sweeps|reads|trotter|knn");
  sweep_cmd->add_option("--values", o.values, "Comma-separated values")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*analyze) return cmd_analyze(o);
    if (*build) return cmd_build(o);
    if (*solve_cmd) return cmd_solve(o);
    if (*eval_cmd) return cmd_evaluate(o);
    if (*run_cmd) return cmd_run(o, false);
    if (*sweep_cmd) return cmd_run(o, true);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
