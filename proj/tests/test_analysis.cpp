#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>

#include "apsel/analysis.hpp"
#include "apsel/error.hpp"
#include "apsel/synthetic.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace apsel;

TEST_SUITE("analysis") {

TEST_CASE("entropy of integer RSS distributions") {
  const auto d = oracle::from_columns({{-50, -50, -50, -50}, {-50, -50, -60, -60}, {-40, -50, -60, -70}});
  const ImportanceVector imp = importance_entropy(d);
  CHECK(imp.raw_scores[0] == 0.0);
  CHECK(imp.raw_scores[1] == 1.0);
  CHECK(imp.raw_scores[2] == 2.0);
  CHECK(imp.active == std::vector<bool>{false, true, true});
  CHECK(imp.scores == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(imp.metric == ImportanceMetric::Entropy);
}

TEST_CASE("entropy bins by the nearest integer") {
  const auto d = oracle::from_columns({{-50.2, -49.8, -60.4, -59.6}});
  CHECK(importance_entropy(d).raw_scores[0] == 1.0);
}

TEST_CASE("sample variance") {
  const auto d = oracle::from_columns({{-50, -50, -50}, {-49, -50, -51}});
  const ImportanceVector imp = importance_variance(d);
  CHECK(imp.raw_scores[0] == 0.0);
  CHECK(imp.raw_scores[1] == 1.0);
  CHECK(imp.active == std::vector<bool>{false, true});
  CHECK_THROWS_AS(importance_variance(oracle::from_columns({{-50}})), InsufficientSamplesError);
}

TEST_CASE("average RSS and its normalization") {
  const auto d = oracle::from_columns({{-50, -70}, {-105, -105}, {-80, -80}});
  const ImportanceVector imp = importance_average(d);
  CHECK(imp.raw_scores[0] == -60.0);
  CHECK(imp.raw_scores[1] == -105.0);
  CHECK(imp.scores[0] == 1.0);
  CHECK(imp.scores[1] == 0.0);
  CHECK(imp.active == std::vector<bool>{true, false, true});
}

TEST_CASE("maximum RSS") {
  const auto d = oracle::from_columns({{-80, -40, -90}, {-105, -105, -105}, {-41, -40, -99}});
  const ImportanceVector imp = importance_max(d);
  CHECK(imp.raw_scores[0] == -40.0);
  CHECK(imp.raw_scores[1] == -105.0);
  CHECK(imp.scores[0] == imp.scores[2]);
  CHECK(imp.scores[0] == 1.0);
  CHECK(imp.active == std::vector<bool>{true, false, true});
}

TEST_CASE("importance dispatch and metric names") {
  const auto d = oracle::from_columns({{-40, -50, -60, -70}, {-50, -50, -60, -60}});
  for (const auto metric :
       {ImportanceMetric::Entropy, ImportanceMetric::Variance, ImportanceMetric::Average, ImportanceMetric::Max}) {
    CHECK(importance(d, metric).metric == metric);
    CHECK(parse_metric(to_string(metric)) == metric);
  }
  CHECK(parse_metric("ENTROPY") == ImportanceMetric::Entropy);
  CHECK_THROWS_AS(parse_metric("median"), ConfigError);
  FingerprintDataset empty = oracle::from_columns({{-1}});
  empty.rss.clear();
  empty.floor.clear();
  empty.latitude.clear();
  empty.longitude.clear();
  CHECK_THROWS_AS(importance_entropy(empty), InsufficientSamplesError);
}

TEST_CASE("min-max normalization") {
  CHECK(min_max_normalize({2.0, 4.0, 3.0}) == std::vector<double>{0.0, 1.0, 0.5});
  CHECK(min_max_normalize({7.0, 7.0}) == std::vector<double>{0.0, 0.0});
  CHECK(min_max_normalize({}).empty());
}

TEST_CASE("entropy and variance agree with independent passes on survey columns") {
  SurveyConfig cfg;
  cfg.num_samples = 2000;
  const FingerprintDataset d = simulate_survey(cfg);
  const ImportanceVector ent = importance_entropy(d);
  const ImportanceVector var = importance_variance(d);
  for (std::size_t a = 0; a < d.num_aps(); a += 7) {
    const auto col = d.column(a);
    CHECK(ent.raw_scores[a] == doctest::Approx(oracle::entropy_bits(col)).epsilon(1e-12));
    CHECK(std::abs(var.raw_scores[a] - oracle::variance_two_pass(col)) <= 1e-9);
  }
  // the first column, computed by the oracle alone
  CHECK(std::abs(var.raw_scores[0] - oracle::variance_two_pass(d.column(0))) <= 1e-9);
}

TEST_CASE("absolute Pearson redundancy") {
  SUBCASE("perfect dependence") {
    const auto d = oracle::from_columns({{1, 2, 3}, {2, 4, 6}, {3, 2, 1}});
    const RedundancyMatrix red = redundancy(d, importance_entropy(d));
    CHECK(red(0, 1) == 1.0);
    CHECK(red(0, 2) == 1.0);
    CHECK(red(1, 2) == 1.0);
    CHECK(red(0, 0) == 1.0);
  }
  SUBCASE("orthogonal patterns") {
    const auto d = oracle::from_columns({{1, 2, 1, 2}, {1, 1, 2, 2}});
    const RedundancyMatrix red = redundancy(d, importance_entropy(d));
    CHECK(red(0, 1) == 0.0);
    CHECK(red(1, 0) == 0.0);
  }
  SUBCASE("inactive and constant columns are zeroed") {
    const auto d = oracle::from_columns({{-50, -60, -70}, {-105, -105, -105}, {-40, -45, -41}});
    const ImportanceVector imp = importance_entropy(d);
    const RedundancyMatrix red = redundancy(d, imp);
    CHECK_FALSE(red.active_mask[1]);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(red(1, j) == 0.0);
      CHECK(red(j, 1) == 0.0);
    }
  }
  SUBCASE("dimension mismatch") {
    const auto d = oracle::from_columns({{1, 2, 3}, {2, 4, 6}});
    ImportanceVector imp = importance_entropy(d);
    imp.active.pop_back();
    CHECK_THROWS_AS(redundancy(d, imp), ConfigError);
  }
}

TEST_CASE("redundancy matches a naive Pearson double loop") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> rss(-100, -30);
  for (int round = 0; round < 10; ++round) {
    std::vector<std::vector<double>> cols(5, std::vector<double>(10));
    for (auto& c : cols) {
      for (auto& v : c) v = rss(rng);
    }
    const auto d = oracle::from_columns(cols);
    const RedundancyMatrix red = redundancy(d, importance_variance(d));
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        const double expected = i == j ? 1.0 : std::abs(oracle::pearson(cols[i], cols[j]));
        CHECK(std::abs(red(i, j) - expected) <= 1e-12);
      }
    }
  }
}

TEST_CASE("redundancy properties on a survey") {
  SurveyConfig cfg;
  cfg.num_samples = 1500;
  const FingerprintDataset d = simulate_survey(cfg);
  const ImportanceVector imp = importance_entropy(d);
  const RedundancyMatrix red = redundancy(d, imp);
  const std::size_t n = d.num_aps();
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(red(i, i) == (imp.active[i] ? 1.0 : 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      REQUIRE(red(i, j) == red(j, i));
      REQUIRE(red(i, j) >= 0.0);
      REQUIRE(red(i, j) <= 1.0);
    }
  }
}

TEST_CASE("redundancy is independent of the worker count") {
  SurveyConfig cfg;
  cfg.num_samples = 800;
  const FingerprintDataset d = simulate_survey(cfg);
  ::setenv("APSEL_THREADS", "1", 1);
  const RedundancyMatrix one = redundancy(d, importance_entropy(d));
  ::setenv("APSEL_THREADS", "3", 1);
  const RedundancyMatrix three = redundancy(d, importance_entropy(d));
  ::unsetenv("APSEL_THREADS");
  CHECK(one.values == three.values);
}

TEST_CASE("importance and redundancy CSV exports") {
  ScratchDir dir;
  const auto d = oracle::from_columns({{-50, -60, -70}, {-105, -105, -105}});
  const ImportanceVector imp = importance_entropy(d);
  write_importance_csv(d, imp, dir / "imp.csv");
  write_redundancy_csv(d, redundancy(d, imp), dir / "red.csv");
  std::ifstream in(dir / "imp.csv");
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "ap_id,raw,normalized,active");
  CHECK(first.rfind("WAP1,", 0) == 0);
  CHECK(first.back() == '1');
  CHECK(second == "WAP2,0,0,0");
  std::ifstream rin(dir / "red.csv");
  std::getline(rin, header);
  CHECK(header == "ap_id,WAP1,WAP2");
}

}  // TEST_SUITE
