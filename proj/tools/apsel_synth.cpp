// apsel-synth: writes a simulated multi-building survey in the raw
// UJIIndoorLoc column layout, for use when the real dataset is absent.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "apsel/error.hpp"
#include "apsel/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulated WiFi fingerprint survey"};
  apsel::SurveyConfig cfg;
  std::string out = "survey.csv";
  app.add_option("--out", out, "Output CSV path");
  app.add_option("--samples", cfg.num_samples, "Fingerprint rows");
  app.add_option("--aps", cfg.num_aps, "AP columns");
  app.add_option("--reference-points", cfg.reference_points, "Distinct surveyed locations");
  app.add_option("--silent-aps", cfg.silent_aps, "Columns never detected");
  app.add_option("--external-aps", cfg.external_aps, "APs outside the buildings");
  app.add_option("--seed", cfg.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    apsel::write_survey_csv(cfg, out);
  } catch (const apsel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const apsel::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
  std::printf("%zu samples x %zu APs -> %s\n", cfg.num_samples, cfg.num_aps, out.c_str());
  return 0;
}
