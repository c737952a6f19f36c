#include "apsel/anneal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include "apsel/error.hpp"
#include "apsel/parallel.hpp"
#include "apsel/random.hpp"

namespace apsel {

// ---- selection.hpp helpers ------------------------------------------------

std::string to_bit_string(const BitVector& x) {
  std::string s(x.size(), '0');
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) s[i] = '1';
  }
  return s;
}

BitVector from_bit_string(std::string_view bits) {
  BitVector x(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw ConfigError("bit string may only contain 0 and 1");
    x[i] = bits[i] == '1';
  }
  return x;
}

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::SA: return "sa";
    case SamplerKind::SQA: return "sqa";
    case SamplerKind::Exact: return "exact";
    case SamplerKind::AllAps: return "all-aps";
  }
  return "unknown";
}

SamplerKind parse_sampler(std::string_view name) {
  if (name == "sa" || name == "SA") return SamplerKind::SA;
  if (name == "sqa" || name == "SQA") return SamplerKind::SQA;
  if (name == "exact" || name == "EXACT") return SamplerKind::Exact;
  if (name == "all-aps" || name == "ALL_APS") return SamplerKind::AllAps;
  throw ConfigError("unknown sampler '" + std::string(name) + "' (expected sa|sqa|exact|all-aps)");
}

void AnnealConfig::validate(SamplerKind kind) const {
  if (num_reads < 1) throw ConfigError("reads must be positive");
  if (num_sweeps < 1) throw ConfigError("sweeps must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be finite and positive");
  if (kind == SamplerKind::SA) {
    if (!(beta_hot > 0.0) || !std::isfinite(beta_hot)) {
      throw ConfigError("beta_hot must be finite and positive");
    }
  }
  if (kind == SamplerKind::SQA) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be finite and positive");
    if (!(gamma_final_fraction > 0.0 && gamma_final_fraction <= 1.0)) {
      throw ConfigError("gamma_final_fraction must lie in (0, 1]");
    }
    if (trotter_slices < 2) throw ConfigError("trotter slices must be at least 2");
  }
}

std::vector<std::size_t> selected_indices(const BitVector& x) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) out.push_back(i);
  }
  return out;
}

// ---- samplers ---------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

// Metropolis test for an uphill move costs scaled_delta = beta * delta > 0.
// Beyond the cutoff the acceptance probability is below 1e-21 and no random
// number is drawn.
// The polynomial bounds 1 - x <= exp(-x) <= 1 / (1 + x + x^2/2 + x^3/6)
// settle most draws without exp and never change the decision.
inline bool metropolis(double scaled_delta, std::mt19937_64& rng) {
  if (scaled_delta <= 0.0) return true;
  if (scaled_delta > 48.0) return false;
  const double u = uniform01(rng);
  const double x = scaled_delta;
  if (u < 1.0 - x) return true;
  if (u * (1.0 + x * (1.0 + x * (0.5 + x * (1.0 / 6.0)))) >= 1.0) return false;
  return u < std::exp(-x);
}

void randomize(BitVector& x, std::mt19937_64& rng) {
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i % 64 == 0) word = rng();
    x[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
}

/// field[i] = base[i] + scale * sum_{j : x_j = 1} w[i n + j]
std::vector<double> local_fields(const std::vector<double>& base, const std::vector<double>& w, double scale,
                                 const BitVector& x) {
  const std::size_t n = x.size();
  std::vector<double> field(base);
  for (std::size_t j = 0; j < n; ++j) {
    if (!x[j]) continue;
    const double* row = w.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) field[i] += scale * row[i];
  }
  return field;
}

/// Flips x_j and moves every field by the change in j's contribution.
/// Requires w symmetric with a zero diagonal. The update is element-wise
/// without contraction, so every clone produces identical fields.
__attribute__((target_clones("avx2", "default"))) void flip(BitVector& x, std::vector<double>& field, const std::vector<double>& w, double scale,
                 std::size_t j) {
  const std::size_t n = x.size();
  x[j] ^= 1U;
  const double step = x[j] ? scale : -scale;
  const double* row = w.data() + j * n;
  double* f = field.data();
  for (std::size_t i = 0; i < n; ++i) f[i] += step * row[i];
}

/// QUBO energy from a dense coupling matrix, summing over set bits only.
double sparse_energy(const QuboModel& model, const std::vector<double>& w, const BitVector& x) {
  const std::size_t n = model.size();
  std::vector<std::size_t> ones;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i]) ones.push_back(i);
  }
  double e = model.offset;
  for (std::size_t a = 0; a < ones.size(); ++a) {
    const std::size_t i = ones[a];
    e += model.linear[i];
    for (std::size_t b = a + 1; b < ones.size(); ++b) e += w[i * n + ones[b]];
  }
  return e;
}

SampleSet collect(const QuboModel& model, std::vector<BitVector> finals, SamplerKind kind,
                  const AnnealConfig& cfg, double seconds) {
  std::map<BitVector, int> counts;
  for (auto& x : finals) ++counts[std::move(x)];

  SampleSet out;
  out.sampler = kind;
  out.config = cfg;
  out.rows.reserve(counts.size());
  for (auto& [x, c] : counts) out.rows.push_back({x, energy(model, x), c});
  // map order is lexicographic, so a stable sort keeps lexicographic ties
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const SampleRow& a, const SampleRow& b) { return a.energy < b.energy; });
  out.timing.total_anneal_seconds = seconds;
  out.timing.per_read_seconds = seconds / static_cast<double>(cfg.num_reads);
  return out;
}

std::vector<double> geometric_schedule(double from, double to, int steps) {
  std::vector<double> out(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out[0] = to;
    return out;
  }
  const double ratio = std::log(to / from);
  for (int s = 0; s < steps; ++s) {
    out[static_cast<std::size_t>(s)] = from * std::exp(ratio * s / (steps - 1));
  }
  return out;
}

}  // namespace

int SampleSet::num_reads() const {
  int total = 0;
  for (const auto& r : rows) total += r.occurrences;
  return total;
}

SampleSet sa_sample(const QuboModel& model, const AnnealConfig& cfg) {
  cfg.validate(SamplerKind::SA);
  model.validate();
  const std::size_t n = model.size();
  if (n == 0) throw ConfigError("model has no variables");

  const std::vector<double> w = dense_couplings(model);
  const std::vector<double> betas = geometric_schedule(cfg.beta_hot, cfg.beta, cfg.num_sweeps);
  std::vector<BitVector> finals(static_cast<std::size_t>(cfg.num_reads));

  const auto start = Clock::now();
  parallel_for(finals.size(), [&](std::size_t read) {
    auto rng = make_stream(cfg.seed, read);
    BitVector x(n);
    randomize(x, rng);
    std::vector<double> field = local_fields(model.linear, w, 1.0, x);
    for (const double beta : betas) {
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = x[i] ? -field[i] : field[i];
        if (metropolis(beta * delta, rng)) flip(x, field, w, 1.0, i);
      }
    }
    finals[read] = std::move(x);
  });
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return collect(model, std::move(finals), SamplerKind::SA, cfg, seconds);
}

double trotter_coupling(double beta, double gamma, int slices) {
  const double arg = beta * gamma / slices;
  // ln coth(a) = -ln tanh(a)
  return -std::log(std::tanh(arg)) / (2.0 * beta);
}

SampleSet sqa_sample(const QuboModel& model, const AnnealConfig& cfg) {
  cfg.validate(SamplerKind::SQA);
  model.validate();
  const std::size_t n = model.size();
  if (n == 0) throw ConfigError("model has no variables");

  const IsingModel ising = to_ising(model);
  std::vector<double> jd(n * n, 0.0);
  for (const auto& c : ising.couplings) {
    jd[c.i * n + c.j] = c.value;
    jd[c.j * n + c.i] = c.value;
  }
  // With s_j = 2 x_j - 1:  h_i + sum_j J_ij s_j = base_i + 2 sum_{x_j = 1} J_ij
  std::vector<double> base(ising.h);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) base[i] -= jd[i * n + j];
  }
  const std::vector<double> qubo_w = dense_couplings(model);

  const auto slices = static_cast<std::size_t>(cfg.trotter_slices);
  const double inv_p = 1.0 / static_cast<double>(slices);
  const double beta = cfg.beta;
  std::vector<double> j_perp(static_cast<std::size_t>(cfg.num_sweeps));
  for (int s = 0; s < cfg.num_sweeps; ++s) {
    const double progress = cfg.num_sweeps == 1 ? 0.0 : static_cast<double>(s) / (cfg.num_sweeps - 1);
    const double field = cfg.gamma * (1.0 - (1.0 - cfg.gamma_final_fraction) * progress);
    j_perp[static_cast<std::size_t>(s)] = trotter_coupling(beta, field, cfg.trotter_slices);
  }

  std::vector<BitVector> finals(static_cast<std::size_t>(cfg.num_reads));
  const auto start = Clock::now();
  parallel_for(finals.size(), [&](std::size_t read) {
    auto rng = make_stream(cfg.seed, read);
    std::vector<BitVector> replica(slices, BitVector(n));
    std::vector<std::vector<double>> local(slices);
    for (std::size_t p = 0; p < slices; ++p) {
      randomize(replica[p], rng);
      local[p] = local_fields(base, jd, 2.0, replica[p]);
    }

    for (const double jp : j_perp) {
      for (std::size_t p = 0; p < slices; ++p) {
        BitVector& cur = replica[p];
        std::vector<double>& field = local[p];
        const BitVector& up = replica[(p + 1) % slices];
        const BitVector& down = replica[(p + slices - 1) % slices];
        for (std::size_t i = 0; i < n; ++i) {
          const double s = cur[i] ? 1.0 : -1.0;
          const double neighbours = (up[i] ? 1.0 : -1.0) + (down[i] ? 1.0 : -1.0);
          const double delta = -2.0 * s * field[i] * inv_p + 2.0 * jp * s * neighbours;
          if (metropolis(beta * delta, rng)) flip(cur, field, jd, 2.0, i);
        }
      }
    }

    std::size_t best = 0;
    double best_e = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < slices; ++p) {
      const double e = sparse_energy(model, qubo_w, replica[p]);
      if (e < best_e) {
        best_e = e;
        best = p;
      }
    }
    finals[read] = std::move(replica[best]);
  });
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return collect(model, std::move(finals), SamplerKind::SQA, cfg, seconds);
}

double success_probability(const SampleSet& samples, double reference_energy) {
  int hits = 0;
  int total = 0;
  for (const auto& r : samples.rows) {
    total += r.occurrences;
    if (r.energy <= reference_energy + 1e-9) hits += r.occurrences;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

std::optional<double> tts(const SampleSet& samples, double reference_energy, double target_probability) {
  if (!(target_probability > 0.0 && target_probability < 1.0)) {
    throw ConfigError("target probability must lie strictly between 0 and 1");
  }
  const double ps = success_probability(samples, reference_energy);
  const double per_read = samples.timing.per_read_seconds;
  if (ps <= 0.0) return std::nullopt;
  if (ps >= 1.0) return per_read;
  return per_read * std::log(1.0 - target_probability) / std::log(1.0 - ps);
}

SolveOutcome solve(const QuboModel& model, SamplerKind sampler, const AnnealConfig& cfg) {
  SolveOutcome out;
  switch (sampler) {
    case SamplerKind::Exact: {
      ExactSolution exact = brute_force(model);
      out.selection = std::move(exact.selection);
      out.selection.config = cfg;
      out.best = std::move(exact.best);
      return out;
    }
    case SamplerKind::SA:
    case SamplerKind::SQA: {
      const auto start = Clock::now();
      SampleSet samples = sampler == SamplerKind::SA ? sa_sample(model, cfg) : sqa_sample(model, cfg);
      if (samples.rows.empty()) throw SolverError("sampler returned no samples");
      out.best = samples.best().x;
      out.selection.selected = selected_indices(out.best);
      out.selection.achieved_k = out.selection.selected.size();
      out.selection.num_aps = model.size();
      out.selection.best_energy = samples.best().energy;
      out.selection.sampler = sampler;
      out.selection.config = cfg;
      out.selection.solve_seconds = std::chrono::duration<double>(Clock::now() - start).count();
      out.samples = std::move(samples);
      return out;
    }
    case SamplerKind::AllAps: break;
  }
  throw ConfigError("all-aps is a baseline, not a QUBO sampler");
}

SelectionResult select(const QuboModel& model, SamplerKind sampler, const AnnealConfig& cfg) {
  return solve(model, sampler, cfg).selection;
}

// ---- JSON -------------------------------------------------------------------

nlohmann::json to_json(const AnnealConfig& cfg) {
  return {
      {"num_reads", cfg.num_reads},
      {"num_sweeps", cfg.num_sweeps},
      {"beta", cfg.beta},
      {"beta_hot", cfg.beta_hot},
      {"gamma", cfg.gamma},
      {"gamma_final_fraction", cfg.gamma_final_fraction},
      {"trotter_slices", cfg.trotter_slices},
      {"seed", cfg.seed},
  };
}

AnnealConfig anneal_config_from_json(const nlohmann::json& j) {
  AnnealConfig cfg;
  cfg.num_reads = j.value("num_reads", cfg.num_reads);
  cfg.num_sweeps = j.value("num_sweeps", cfg.num_sweeps);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.beta_hot = j.value("beta_hot", cfg.beta_hot);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.gamma_final_fraction = j.value("gamma_final_fraction", cfg.gamma_final_fraction);
  cfg.trotter_slices = j.value("trotter_slices", cfg.trotter_slices);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

nlohmann::json to_json(const SampleSet& samples, bool include_timing) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : samples.rows) {
    rows.push_back({{"x", to_bit_string(r.x)}, {"energy", r.energy}, {"occurrences", r.occurrences}});
  }
  nlohmann::json j = {
      {"sampler", std::string(to_string(samples.sampler))},
      {"rows", std::move(rows)},
      {"config", to_json(samples.config)},
  };
  if (include_timing) {
    j["timing"] = {{"total_anneal_seconds", samples.timing.total_anneal_seconds},
                   {"per_read_seconds", samples.timing.per_read_seconds}};
  }
  return j;
}

nlohmann::json to_json(const SelectionResult& result, bool include_timing) {
  nlohmann::json j = {
      {"selected", result.selected},
      {"achieved_k", result.achieved_k},
      {"num_aps", result.num_aps},
      {"best_energy", result.best_energy},
      {"sampler", std::string(to_string(result.sampler))},
      {"config", to_json(result.config)},
  };
  if (include_timing) {
    j["solve_seconds"] = result.solve_seconds;
    j["tts_seconds"] = result.tts_seconds ? nlohmann::json(*result.tts_seconds) : nlohmann::json(nullptr);
  }
  return j;
}

void write_samples_json(const SampleSet& samples, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(samples).dump() << '\n';
}

}  // namespace apsel
