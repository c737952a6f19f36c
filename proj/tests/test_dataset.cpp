#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "apsel/dataset.hpp"
#include "apsel/error.hpp"
#include "apsel/synthetic.hpp"
#include "oracles.hpp"
#include "scratch.hpp"

using namespace apsel;

TEST_SUITE("dataset") {

TEST_CASE("sentinel cells become the not-detected value") {
  ScratchDir dir;
  const auto path = dir.write("tiny.csv",
                              "WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR\n"
                              "-50,-60,-7500,4864900,0\n"
                              "-70,100,-7400,4864910,1\n"
                              "100,100,-7300,4864920,2\n");
  const FingerprintDataset d = load_csv(path);
  CHECK(d.num_samples() == 3);
  CHECK(d.num_aps() == 2);
  const std::vector<double> expected{-50, -60, -70, -105, -105, -105};
  CHECK(d.rss == expected);
  CHECK(d.ap_ids == std::vector<std::string>{"WAP001", "WAP002"});
  CHECK(d.floor == std::vector<int>{0, 1, 2});
  CHECK(d.longitude[2] == -7300.0);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("all-sentinel row") {
  ScratchDir dir;
  const auto path = dir.write("one.csv", "WAP001,WAP002,WAP003,LONGITUDE,LATITUDE,FLOOR\n100,100,100,1,2,0\n");
  const FingerprintDataset d = load_csv(path);
  REQUIRE(d.num_samples() == 1);
  for (const double v : d.rss) CHECK(v == -105.0);
}

TEST_CASE("configured sentinel replacement and column names") {
  ScratchDir dir;
  const auto path = dir.write("cfg.csv", "AP_a,AP_b,X,Y,Z,EXTRA\n-40,100,1,2,3,foo\n");
  IngestConfig cfg;
  cfg.ap_prefix = "AP_";
  cfg.longitude_column = "X";
  cfg.latitude_column = "Y";
  cfg.floor_column = "Z";
  cfg.not_detected_value = -110.0;
  const FingerprintDataset d = load_csv(path, cfg);
  CHECK(d.rss == std::vector<double>{-40.0, -110.0});
  CHECK(d.not_detected_value == -110.0);
  CHECK(d.longitude[0] == 1.0);
  CHECK(d.latitude[0] == 2.0);
  CHECK(d.floor[0] == 3);
}

TEST_CASE("byte-order mark, CRLF, quotes and blank lines are tolerated") {
  ScratchDir dir;
  const auto path = dir.write("crlf.csv",
                              "\xEF\xBB\xBF\"WAP001\",\"LONGITUDE\",\"LATITUDE\",\"FLOOR\"\r\n"
                              "-55,1.5,2.5,1\r\n\r\n"
                              "100,3.5,4.5,0\r\n");
  const FingerprintDataset d = load_csv(path);
  CHECK(d.num_samples() == 2);
  CHECK(d.rss == std::vector<double>{-55.0, -105.0});
  CHECK(d.latitude == std::vector<double>{2.5, 4.5});
}

TEST_CASE("readings weaker than the not-detected floor are clamped to it") {
  ScratchDir dir;
  const auto path = dir.write("weak.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n-120,0,0,0\n-104,1,1,0\n");
  const FingerprintDataset d = load_csv(path);
  CHECK(d.rss == std::vector<double>{-105.0, -104.0});
}

TEST_CASE("schema errors name the missing columns") {
  ScratchDir dir;
  const auto path = dir.write("nolat.csv", "WAP001,LONGITUDE,FLOOR\n-50,0,0\n");
  try {
    load_csv(path);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("LATITUDE") != std::string::npos);
  }
  CHECK_THROWS_AS(load_csv(dir.write("noap.csv", "LONGITUDE,LATITUDE,FLOOR\n0,0,0\n")), SchemaError);
  CHECK_THROWS_AS(load_csv(dir.write("dup.csv", "WAP001,WAP001,LONGITUDE,LATITUDE,FLOOR\n-1,-1,0,0,0\n")),
                  SchemaError);
}

TEST_CASE("parse errors carry row and column") {
  ScratchDir dir;
  const auto path = dir.write("bad.csv",
                              "WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR\n"
                              "-50,-60,0,0,0\n"
                              "-50,abc,0,0,0\n");
  try {
    load_csv(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == 2);
  }
  CHECK_THROWS_AS(load_csv(dir.write("pos.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n5,0,0,0\n")), ParseError);
  CHECK_THROWS_AS(load_csv(dir.write("ragged.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n-5,0,0\n")), ParseError);
  CHECK_THROWS_AS(load_csv(dir.write("floor.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n-5,0,0,1.5\n")), ParseError);
  CHECK_THROWS_AS(load_csv(dir.write("nan.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n-5,nan,0,1\n")), ParseError);
}

TEST_CASE("empty inputs") {
  ScratchDir dir;
  CHECK_THROWS_AS(load_csv(dir.write("empty.csv", "")), EmptyDatasetError);
  CHECK_THROWS_AS(load_csv(dir.write("header.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n")), EmptyDatasetError);
  CHECK_THROWS_AS(load_csv(dir / "absent.csv"), DataError);
  IngestConfig cfg;
  cfg.not_detected_value = 0.0;
  CHECK_THROWS_AS(load_csv(dir.write("x.csv", "WAP001,LONGITUDE,LATITUDE,FLOOR\n-1,0,0,0\n"), cfg), ConfigError);
}

TEST_CASE("multiple files concatenate when their AP columns agree") {
  ScratchDir dir;
  const std::vector<std::filesystem::path> paths{
      dir.write("a.csv", "WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR\n-50,100,0,0,0\n"),
      dir.write("b.csv", "WAP001,WAP002,LONGITUDE,LATITUDE,FLOOR\n-60,-70,1,1,1\n-61,-71,2,2,1\n")};
  const FingerprintDataset d = load_csv(paths);
  CHECK(d.num_samples() == 3);
  CHECK(d.rss == std::vector<double>{-50, -105, -60, -70, -61, -71});
  const std::vector<std::filesystem::path> mismatched{
      paths[0], dir.write("c.csv", "WAP002,WAP001,LONGITUDE,LATITUDE,FLOOR\n-1,-1,0,0,0\n")};
  CHECK_THROWS_AS(load_csv(mismatched), SchemaError);
}

TEST_CASE("write_csv round-trips through load_csv with the transform sidecar") {
  ScratchDir dir;
  const FingerprintDataset raw = oracle::make_dataset({{-50, -105}, {-61.5, -70}, {-105, -105}},
                                                     {4864900, 4864950, 4865000}, {-7500, -7400, -7300}, {0, 1, 1});
  const FingerprintDataset norm = normalize_labels(raw);
  write_csv(norm, dir / "out.csv");
  FingerprintDataset back = load_csv(dir / "out.csv");
  read_transform_json(back, dir / "out.csv.json");
  CHECK(back.rss == norm.rss);
  CHECK(back.latitude == norm.latitude);
  CHECK(back.longitude == norm.longitude);
  CHECK(back.floor == norm.floor);
  CHECK(back.transform == norm.transform);
}

TEST_CASE("min-max label normalization") {
  const FingerprintDataset d =
      oracle::make_dataset({{-50}, {-60}, {-70}}, {10.0, 20.0, 30.0}, {-7500, -7400, -7300}, {0, 1, 2});
  const FingerprintDataset n = normalize_labels(d);
  CHECK(n.longitude == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(n.latitude == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(n.floor == d.floor);
  CHECK(n.rss == d.rss);
  CHECK(n.transform.lon_min == -7500.0);
  CHECK(n.transform.lon_max == -7300.0);
  CHECK(n.transform.lon_to_metric(0.5) == doctest::Approx(-7400.0).epsilon(1e-15));

  SUBCASE("already normalized coordinates are left alone") {
    const FingerprintDataset unit =
        oracle::make_dataset({{-1}, {-2}, {-3}}, {0.0, 0.25, 1.0}, {1.0, 0.0, 0.5}, {0, 0, 0});
    const FingerprintDataset again = normalize_labels(unit);
    CHECK(again.latitude == unit.latitude);
    CHECK(again.longitude == unit.longitude);
    CHECK(again.transform.is_identity());
  }
  SUBCASE("normalizing twice keeps values and the composed transform") {
    const FingerprintDataset twice = normalize_labels(n);
    CHECK(twice.latitude == n.latitude);
    CHECK(twice.longitude == n.longitude);
    CHECK(twice.transform == n.transform);
  }
}

TEST_CASE("degenerate coordinate ranges") {
  CHECK_THROWS_AS(normalize_labels(oracle::make_dataset({{-1}, {-2}}, {5.0, 5.0}, {1.0, 2.0})), DegenerateRangeError);
  CHECK_THROWS_AS(normalize_labels(oracle::make_dataset({{-1}, {-2}}, {1.0, 2.0}, {3.0, 3.0})), DegenerateRangeError);
  CHECK_THROWS_AS(normalize_labels(oracle::make_dataset({{-1}}, {1.0}, {2.0})), DegenerateRangeError);
}

TEST_CASE("surveyed coordinates normalize into [0,1] and invert to meters") {
  SurveyConfig cfg;
  cfg.num_samples = 3000;
  const FingerprintDataset raw = simulate_survey(cfg);
  const FingerprintDataset n = normalize_labels(raw);
  double worst = 0.0;
  for (std::size_t l = 0; l < n.num_samples(); ++l) {
    CHECK(n.latitude[l] >= 0.0);
    CHECK(n.latitude[l] <= 1.0);
    CHECK(n.longitude[l] >= 0.0);
    CHECK(n.longitude[l] <= 1.0);
    worst = std::max(worst, std::abs(n.transform.lat_to_metric(n.latitude[l]) - raw.latitude[l]));
    worst = std::max(worst, std::abs(n.transform.lon_to_metric(n.longitude[l]) - raw.longitude[l]));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("stratified split: 100 samples over 5 floors") {
  std::vector<std::vector<double>> rows(100, std::vector<double>{-50.0});
  std::vector<int> floors(100);
  for (int l = 0; l < 100; ++l) floors[static_cast<std::size_t>(l)] = l % 5;
  const FingerprintDataset d = oracle::make_dataset(rows, {}, {}, floors);
  const DatasetSplit s = split(d, 0.2, 7);
  CHECK(s.train.num_samples() == 80);
  CHECK(s.test.num_samples() == 20);
  std::map<int, int> per_floor;
  for (const int f : s.test.floor) ++per_floor[f];
  for (int f = 0; f < 5; ++f) CHECK(per_floor[f] == 4);

  const DatasetSplit again = split(d, 0.2, 7);
  CHECK(again.test_indices == s.test_indices);
  CHECK(again.train_indices == s.train_indices);
  CHECK(split(d, 0.2, 8).test_indices != s.test_indices);
}

TEST_CASE("split partitions every floor within one sample of the fraction") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 25; ++round) {
    const int floors = 1 + static_cast<int>(rng() % 6);
    std::vector<int> labels;
    for (int f = 0; f < floors; ++f) {
      const int count = 2 + static_cast<int>(rng() % 40);
      for (int c = 0; c < count; ++c) labels.push_back(f);
    }
    std::shuffle(labels.begin(), labels.end(), rng);
    const FingerprintDataset d =
        oracle::make_dataset(std::vector<std::vector<double>>(labels.size(), {-1.0}), {}, {}, labels);
    const double fraction = 0.05 + 0.9 * static_cast<double>(rng() % 1000) / 1000.0;
    const DatasetSplit s = split(d, fraction, rng());

    std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
    for (const auto t : s.test_indices) CHECK(all.insert(t).second);
    CHECK(all.size() == labels.size());
    CHECK(std::is_sorted(s.test_indices.begin(), s.test_indices.end()));

    std::map<int, int> total, test;
    for (const int f : labels) ++total[f];
    for (const int f : s.test.floor) ++test[f];
    for (const auto& [f, count] : total) {
      CHECK(std::abs(test[f] - fraction * count) <= 1.0);
      CHECK(test[f] >= 1);
      CHECK(test[f] <= count - 1);
    }
    for (std::size_t t = 0; t < s.test_indices.size(); ++t) {
      CHECK(s.test.floor[t] == labels[s.test_indices[t]]);
    }
  }
}

TEST_CASE("split errors") {
  const FingerprintDataset d = oracle::make_dataset({{-1}, {-2}, {-3}}, {}, {}, {0, 0, 1});
  CHECK_THROWS_AS(split(d, 0.2, 1), StratificationError);
  const FingerprintDataset ok = oracle::make_dataset({{-1}, {-2}}, {}, {}, {0, 0});
  CHECK_THROWS_AS(split(ok, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split(ok, 1.0, 1), ConfigError);
}

TEST_CASE("full-size survey split at fraction 0.2") {
  // 21,048 rows over 13 floors, seed 1; per-floor rounding keeps the test
  // partition within a few rows of 4,210.
  const FingerprintDataset d = simulate_survey(SurveyConfig{});
  REQUIRE(d.num_samples() == 21048);
  REQUIRE(d.num_aps() == 520);
  const DatasetSplit s = split(d, 0.2, 1);
  CHECK(std::abs(static_cast<long>(s.test.num_samples()) - 4210L) <= 5);
  CHECK(s.test.num_samples() == 4209);
}

}  // TEST_SUITE
