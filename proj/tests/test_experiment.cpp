#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "apsel/error.hpp"
#include "apsel/experiment.hpp"
#include "apsel/synthetic.hpp"
#include "scratch.hpp"

using namespace apsel;

namespace {

SurveyConfig small_survey() {
  SurveyConfig s;
  s.num_aps = 40;
  s.num_samples = 600;
  s.reference_points = 80;
  s.silent_aps = 4;
  s.external_aps = 6;
  return s;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.qubo.k = 5;
  cfg.anneal.num_reads = 20;
  cfg.anneal.num_sweeps = 40;
  cfg.trials = 2;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("parameters and validation") {
  ExperimentConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  apply_parameter(cfg, "alpha", "0.5");
  apply_parameter(cfg, "eta", "4");
  apply_parameter(cfg, "k", "7");
  apply_parameter(cfg, "metric", "variance");
  apply_parameter(cfg, "beta", "5");
  apply_parameter(cfg, "gamma", "2");
  apply_parameter(cfg, "sweeps", "100");
  apply_parameter(cfg, "reads", "50");
  apply_parameter(cfg, "trotter", "4");
  apply_parameter(cfg, "knn", "5");
  CHECK(cfg.qubo.alpha == 0.5);
  CHECK(cfg.qubo.eta == 4.0);
  CHECK(cfg.qubo.k == 7);
  CHECK(cfg.qubo.metric == ImportanceMetric::Variance);
  CHECK(cfg.anneal.beta == 5.0);
  CHECK(cfg.anneal.gamma == 2.0);
  CHECK(cfg.anneal.num_sweeps == 100);
  CHECK(cfg.anneal.num_reads == 50);
  CHECK(cfg.anneal.trotter_slices == 4);
  CHECK(cfg.localizer.k_neighbors == 5);
  CHECK_THROWS_AS(apply_parameter(cfg, "temperature", "1"), ConfigError);
  CHECK_THROWS_AS(apply_parameter(cfg, "alpha", "0.5x"), ConfigError);
  CHECK_THROWS_AS(apply_parameter(cfg, "k", "2.5"), ConfigError);

  const auto rejects = [](auto mutate, const std::string& field) {
    ExperimentConfig c;
    mutate(c);
    try {
      c.validate();
      return false;
    } catch (const ConfigError& e) {
      return std::string(e.what()).find(field) != std::string::npos;
    }
  };
  CHECK(rejects([](ExperimentConfig& c) { c.qubo.alpha = 1.5; }, "alpha"));
  CHECK(rejects([](ExperimentConfig& c) { c.qubo.k = 0; }, "k"));
  CHECK(rejects([](ExperimentConfig& c) { c.trials = 0; }, "trials"));
  CHECK(rejects([](ExperimentConfig& c) { c.test_fraction = 1.0; }, "fraction"));
  CHECK(rejects([](ExperimentConfig& c) { c.samplers.clear(); }, "sampler"));
  CHECK(rejects([](ExperimentConfig& c) { c.sweep = SweepAxis{"alpha", {"0.5", "2"}}; }, "alpha"));
  CHECK(rejects([](ExperimentConfig& c) { c.sweep = SweepAxis{"colour", {"1"}}; }, "colour"));
}

TEST_CASE("config JSON round trip") {
  ExperimentConfig cfg = small_config();
  cfg.dataset_paths = {"a.csv", "b.csv"};
  cfg.sweep = SweepAxis{"eta", {"1", "2"}};
  cfg.samplers = {SamplerKind::SA, SamplerKind::Exact};
  cfg.base_seed = 42;
  const ExperimentConfig back = experiment_config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
  CHECK(back.sweep->values == std::vector<std::string>{"1", "2"});
  CHECK(back.samplers == cfg.samplers);
}

TEST_CASE("runs are deterministic and artifacts replay") {
  ScratchDir dir;
  const auto csv = dir / "survey.csv";
  write_survey_csv(small_survey(), csv);

  ExperimentConfig cfg = small_config();
  cfg.dataset_paths = {csv};
  cfg.trials = 3;
  cfg.output_dir = dir / "out";
  const ExperimentResult first = run(cfg);
  CHECK(first.records.size() == 9);
  CHECK(first.tts_reference == "best-known");
  CHECK(first.aggregate.size() == 3);
  for (const auto& rec : first.records) {
    CHECK(rec.seed == cfg.base_seed + static_cast<std::uint64_t>(rec.trial));
    if (rec.sampler == SamplerKind::AllAps) {
      CHECK(rec.report.num_aps_used == 40);
      CHECK(rec.report.reduction_fraction == 0.0);
    } else {
      CHECK(rec.reference_energy <= rec.selection.best_energy + 1e-9);
      CHECK(rec.success_probability >= 0.0);
    }
  }
  // the best-known reference is reached by at least one sampler per trial
  for (int t = 0; t < 3; ++t) {
    double best = 0.0;
    for (const auto& rec : first.records) {
      if (rec.trial == t) best = std::max(best, rec.success_probability);
    }
    CHECK(best > 0.0);
  }
  for (const char* name : {"aggregate.csv", "manifest.json", "selection_sqa_0.json", "localization_sa_2.csv",
                           "samples_sa_1.json", "localization_all-aps_0.json"}) {
    CHECK_MESSAGE(std::filesystem::exists(cfg.output_dir / name), name);
  }

  ExperimentConfig again = cfg;
  again.output_dir = dir / "again";
  ::setenv("APSEL_THREADS", "2", 1);
  const ExperimentResult second = run(again);
  ::unsetenv("APSEL_THREADS");
  CHECK(second.manifest.at("artifacts") == first.manifest.at("artifacts"));
  CHECK(slurp(again.output_dir / "localization_sqa_1.csv") == slurp(cfg.output_dir / "localization_sqa_1.csv"));

  CHECK(replay_manifest(cfg.output_dir / "manifest.json", dir / "replay").empty());

  const auto rebuilt = recompute_aggregate(cfg.output_dir);
  REQUIRE(rebuilt.size() == first.aggregate.size());
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    CHECK(rebuilt[i].sampler == first.aggregate[i].sampler);
    CHECK(rebuilt[i].trials == first.aggregate[i].trials);
    CHECK(rebuilt[i].mean_error_m_mean == doctest::Approx(first.aggregate[i].mean_error_m_mean).epsilon(1e-12));
    CHECK(rebuilt[i].mean_error_m_std == doctest::Approx(first.aggregate[i].mean_error_m_std).epsilon(1e-12));
    CHECK(rebuilt[i].floor_accuracy_mean == doctest::Approx(first.aggregate[i].floor_accuracy_mean).epsilon(1e-12));
    CHECK(rebuilt[i].achieved_k_mean == first.aggregate[i].achieved_k_mean);
    CHECK(rebuilt[i].success_probability_mean == first.aggregate[i].success_probability_mean);
  }
}

TEST_CASE("tampered artifacts are reported by replay") {
  ScratchDir dir;
  const auto csv = dir / "survey.csv";
  write_survey_csv(small_survey(), csv);
  ExperimentConfig cfg = small_config();
  cfg.dataset_paths = {csv};
  cfg.samplers = {SamplerKind::SA};
  cfg.trials = 1;
  cfg.output_dir = dir / "out";
  run(cfg);
  auto manifest = nlohmann::json::parse(slurp(cfg.output_dir / "manifest.json"));
  manifest["artifacts"]["selection_sa_0.json"] = sha256_hex("tampered");
  std::ofstream(dir / "m.json") << manifest.dump();
  CHECK(replay_manifest(dir / "m.json", dir / "replay") == std::vector<std::string>{"selection_sa_0.json"});
}

TEST_CASE("small instances use the exact reference") {
  SurveyConfig s = small_survey();
  s.num_aps = 16;
  s.silent_aps = 1;
  s.external_aps = 2;
  const FingerprintDataset d = normalize_labels(simulate_survey(s));
  ExperimentConfig cfg = small_config();
  cfg.qubo.k = 4;
  cfg.samplers = {SamplerKind::Exact, SamplerKind::SA};
  const ExperimentResult r = run_experiment(cfg, d);
  CHECK(r.tts_reference == "exact");
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    const auto& rec = r.records[i];
    if (rec.sampler == SamplerKind::Exact) {
      CHECK(rec.success_probability == 1.0);
      CHECK(rec.reference_energy == rec.selection.best_energy);
    } else {
      CHECK(rec.selection.best_energy >= rec.reference_energy - 1e-9);
    }
  }
}

TEST_CASE("a sweep yields one row per value and sampler") {
  const FingerprintDataset d = normalize_labels(simulate_survey(small_survey()));
  ExperimentConfig cfg = small_config();
  cfg.samplers = {SamplerKind::SA, SamplerKind::AllAps};
  cfg.sweep = SweepAxis{"alpha", {"0.2", "0.5", "0.8"}};
  const auto rows = sweep(cfg, d);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].parameter == "alpha");
    CHECK(rows[i].value == cfg.sweep->values[i / 2]);
    CHECK(rows[i].sampler == cfg.samplers[i % 2]);
    CHECK(rows[i].trials == cfg.trials);
  }
  ExperimentConfig none = small_config();
  CHECK_THROWS_AS(sweep(none, d), ConfigError);
}

TEST_CASE("aggregate statistics") {
  std::vector<TrialRecord> recs(3);
  const double errors[] = {1.0, 2.0, 4.0};
  for (int t = 0; t < 3; ++t) {
    recs[t].parameter = "none";
    recs[t].value = "";
    recs[t].sampler = SamplerKind::SA;
    recs[t].trial = t;
    recs[t].target_k = 2;
    recs[t].selection.achieved_k = t == 2 ? 3 : 2;
    recs[t].report.mean_error_m = errors[t];
    recs[t].report.floor_accuracy = 0.5;
    recs[t].selection.tts_seconds = t == 0 ? std::optional<double>{} : std::optional<double>{1.0 * t};
  }
  const auto rows = aggregate(recs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].trials == 3);
  CHECK(rows[0].mean_error_m_mean == doctest::Approx(7.0 / 3.0));
  CHECK(rows[0].mean_error_m_std == doctest::Approx(std::sqrt(7.0 / 3.0)));
  CHECK(rows[0].floor_accuracy_std == 0.0);
  CHECK(rows[0].k_hit_trials == 2);
  CHECK(rows[0].achieved_k_min == 2);
  CHECK(rows[0].achieved_k_max == 3);
  CHECK(rows[0].tts_defined_trials == 2);
  CHECK(rows[0].tts_seconds_mean == 1.5);

  ScratchDir dir;
  write_aggregate_csv(rows, dir / "a.csv");
  std::ifstream in(dir / "a.csv");
  std::string header;
  std::getline(in, header);
  std::string expected;
  for (const auto& c : aggregate_columns()) expected += (expected.empty() ? "" : ",") + c;
  CHECK(header == expected);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("exit codes and artifacts") {
  ScratchDir dir;
  const std::string cli = APSEL_CLI_PATH;
  const std::string synth = APSEL_SYNTH_PATH;
  const std::string csv = (dir / "survey.csv").string();
  const std::string out = dir.path().string();
  REQUIRE(shell(synth + " --out " + csv + " --samples 400 --aps 30 --reference-points 60 --silent-aps 3 "
                        "--external-aps 4 --seed 3") == 0);

  CHECK(shell(cli + " --help") == 0);
  CHECK(shell(cli + " ingest --dataset " + csv + " --out " + out + "/ingest") == 0);
  CHECK(std::filesystem::exists(dir / "ingest/dataset.csv"));
  CHECK(shell(cli + " analyze --dataset " + csv + " --metric variance --out " + out + "/analyze") == 0);
  CHECK(std::filesystem::exists(dir / "analyze/importance.csv"));
  CHECK(shell(cli + " build --dataset " + csv + " --alpha 0.7 --eta 3 --budget-k 4 --out " + out + "/build") == 0);
  CHECK(std::filesystem::exists(dir / "build/qubo.json"));
  CHECK(shell(cli + " solve --qubo " + out + "/build/qubo.json --sampler sa --reads 10 --sweeps 20 --out " + out +
              "/solve") == 0);
  CHECK(std::filesystem::exists(dir / "solve/selection.json"));
  CHECK(shell(cli + " evaluate --dataset " + csv + " --selection " + out + "/solve/selection.json --out " + out +
              "/eval") == 0);
  CHECK(std::filesystem::exists(dir / "eval/localization.csv"));
  CHECK(shell(cli + " evaluate --dataset " + csv + " --sampler all-aps --knn 1 --floor-height 4 --out " + out +
              "/eval-all") == 0);
  CHECK(shell(cli + " run --dataset " + csv + " --sampler sa --sampler all-aps --budget-k 3 --reads 10 "
                    "--sweeps 20 --trials 2 --seed 5 --out " + out + "/run") == 0);
  CHECK(std::filesystem::exists(dir / "run/manifest.json"));
  CHECK(shell(cli + " run --manifest " + out + "/run/manifest.json --out " + out + "/replay") == 0);
  CHECK(shell(cli + " sweep --dataset " + csv + " --sampler sqa --budget-k 3 --reads 5 --sweeps 10 --trotter 4 "
                    "--gamma 2 --beta 5 --trials 1 --param eta --values 1,4 --out " + out + "/sweep") == 0);
  CHECK(std::filesystem::exists(dir / "sweep/aggregate.csv"));
  CHECK(std::filesystem::exists(dir / "sweep/eta=4/selection_sqa_0.json"));

  // configuration errors
  CHECK(shell(cli + " build --dataset " + csv + " --alpha 1.5 --out " + out + "/x") == 2);
  CHECK(shell(cli + " solve --qubo " + out + "/build/qubo.json --sampler annealer --out " + out + "/x") == 2);
  CHECK(shell(cli + " run --dataset " + csv + " --no-such-flag") == 2);
  CHECK(shell(cli + " sweep --dataset " + csv + " --param colour --values 1 --out " + out + "/x") == 2);
  // data errors
  CHECK(shell(cli + " ingest --dataset " + out + "/missing.csv --out " + out + "/x") == 3);
  dir.write("bad.csv", "WAP001,LATITUDE\n-50,1\n");
  CHECK(shell(cli + " ingest --dataset " + out + "/bad.csv --out " + out + "/x") == 3);
  CHECK(shell(cli + " solve --dataset " + csv + " --sampler exact --budget-k 3 --out " + out + "/x") == 2);
  // solver failure: every AP is penalized, so the optimum selects nothing
  dir.write("empty.json", R"({"n": 2, "linear": [1.0, 1.0], "quadratic": [], "offset": 0.0,
                              "params": {"alpha": 0.8, "eta": 2.0, "k": 1, "metric": "entropy"}})");
  CHECK(shell(cli + " solve --qubo " + out + "/empty.json --sampler sa --reads 5 --sweeps 5 --out " + out + "/x") == 4);
}

}  // TEST_SUITE
