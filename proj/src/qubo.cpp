#include "apsel/qubo.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>

#include "apsel/error.hpp"
#include "apsel/parallel.hpp"

namespace apsel {

double QuboModel::quadratic_at(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  const auto it = std::lower_bound(
      quadratic.begin(), quadratic.end(), std::pair{i, j}, [](const QuadraticTerm& t, const auto& key) {
        return std::pair<std::size_t, std::size_t>{t.i, t.j} < key;
      });
  if (it != quadratic.end() && it->i == i && it->j == j) return it->value;
  return 0.0;
}

void QuboModel::validate() const {
  const std::size_t n = size();
  for (std::size_t t = 0; t < quadratic.size(); ++t) {
    const auto& q = quadratic[t];
    if (!(q.i < q.j) || q.j >= n) {
      throw ConfigError("quadratic key (" + std::to_string(q.i) + ", " + std::to_string(q.j) +
                        ") is not i < j < n");
    }
    if (t > 0) {
      const auto& p = quadratic[t - 1];
      if (std::pair{p.i, p.j} >= std::pair{q.i, q.j}) {
        throw ConfigError("quadratic terms must be sorted with unique keys");
      }
    }
  }
}

QuboModel build_qubo(const ImportanceVector& imp, const RedundancyMatrix& red, const QuboParams& params) {
  const std::size_t n = imp.size();
  if (red.n != n || red.values.size() != n * n || imp.active.size() != n) {
    throw ConfigError("importance and redundancy dimensions differ");
  }
  if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(params.eta > 0.0) || !std::isfinite(params.eta)) throw ConfigError("eta must be positive");
  if (params.k < 1) throw ConfigError("budget k must be at least 1");
  if (static_cast<std::size_t>(params.k) > n) {
    throw ConfigError("budget k=" + std::to_string(params.k) + " exceeds the " + std::to_string(n) +
                      " candidate APs");
  }

  const double alpha = params.alpha;
  const double eta = params.eta;
  const double k = params.k;

  QuboModel model;
  model.params = params;
  model.params.metric = imp.metric;
  model.linear.resize(n);
  const double penalty_linear = eta * (1.0 - 2.0 * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double reward = red.active_mask[i] ? alpha * imp.scores[i] : 0.0;
    model.linear[i] = -reward + penalty_linear;
  }
  model.quadratic.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      model.quadratic.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                                 (1.0 - alpha) * red(i, j) + 2.0 * eta});
    }
  }
  model.offset = eta * k * k;
  return model;
}

double energy(const QuboModel& model, std::span<const std::uint8_t> x) {
  if (x.size() != model.size()) {
    throw ConfigError("bit vector length " + std::to_string(x.size()) + " does not match model size " +
                      std::to_string(model.size()));
  }
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i]) e += model.linear[i];
  }
  for (const auto& q : model.quadratic) {
    if (x[q.i] && x[q.j]) e += q.value;
  }
  return e + model.offset;
}

std::vector<double> dense_couplings(const QuboModel& model) {
  const std::size_t n = model.size();
  std::vector<double> w(n * n, 0.0);
  for (const auto& q : model.quadratic) {
    w[q.i * n + q.j] = q.value;
    w[q.j * n + q.i] = q.value;
  }
  return w;
}

IsingModel to_ising(const QuboModel& model) {
  // x_i = (1 + s_i)/2,  x_i x_j = (1 + s_i + s_j + s_i s_j)/4
  IsingModel ising;
  const std::size_t n = model.size();
  ising.h.resize(n);
  ising.offset = model.offset;
  for (std::size_t i = 0; i < n; ++i) {
    ising.h[i] = model.linear[i] / 2.0;
    ising.offset += model.linear[i] / 2.0;
  }
  ising.couplings.reserve(model.quadratic.size());
  for (const auto& q : model.quadratic) {
    const double quarter = q.value / 4.0;
    ising.h[q.i] += quarter;
    ising.h[q.j] += quarter;
    ising.offset += quarter;
    ising.couplings.push_back({q.i, q.j, quarter});
  }
  return ising;
}

double ising_energy(const IsingModel& model, std::span<const std::int8_t> spins) {
  if (spins.size() != model.size()) throw ConfigError("spin vector length does not match model size");
  double e = 0.0;
  for (std::size_t i = 0; i < spins.size(); ++i) e += model.h[i] * spins[i];
  for (const auto& c : model.couplings) e += c.value * spins[c.i] * spins[c.j];
  return e + model.offset;
}

namespace {

BitVector state_bits(std::uint64_t state, std::size_t n) {
  BitVector x(n);
  for (std::size_t b = 0; b < n; ++b) x[b] = static_cast<std::uint8_t>((state >> b) & 1U);
  return x;
}

struct Candidate {
  double energy;
  std::uint64_t state;
};

// Orders states like their bit vectors compare (x_0 most significant).
std::uint64_t lex_key(std::uint64_t state, std::size_t n) {
  std::uint64_t key = 0;
  for (std::size_t b = 0; b < n; ++b) key = (key << 1) | ((state >> b) & 1U);
  return key;
}

bool within(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * (1.0 + std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace

ExactSolution brute_force(const QuboModel& model) {
  model.validate();
  const std::size_t n = model.size();
  if (n == 0) throw ConfigError("model has no variables");
  if (n > kMaxExactVariables) {
    throw ConfigError("exact enumeration is limited to n <= " + std::to_string(kMaxExactVariables) +
                      " (n = " + std::to_string(n) + "); use the sa or sqa sampler instead");
  }
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> w = dense_couplings(model);

  // Fix the top `prefix_bits` bits per chunk; Gray-code the rest.
  const std::size_t prefix_bits = std::min<std::size_t>(n, 6);
  const std::size_t low_bits = n - prefix_bits;
  const std::size_t chunks = std::size_t{1} << prefix_bits;
  constexpr double kTrackTol = 1e-9;
  std::vector<std::vector<Candidate>> found(chunks);

  parallel_for(chunks, [&](std::size_t c) {
    std::uint64_t state = static_cast<std::uint64_t>(c) << low_bits;
    BitVector x = state_bits(state, n);
    double e = energy(model, x);
    std::vector<double> field(model.linear);  // linear_i + sum_j w_ij x_j
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (x[j]) field[i] += w[i * n + j];
      }
    }
    auto& best = found[c];
    best.push_back({e, state});
    double best_e = e;
    const std::uint64_t steps = std::uint64_t{1} << low_bits;
    for (std::uint64_t g = 1; g < steps; ++g) {
      const auto b = static_cast<std::size_t>(std::countr_zero(g));
      const double sign = x[b] ? -1.0 : 1.0;
      e += sign * field[b];
      x[b] ^= 1U;
      state ^= std::uint64_t{1} << b;
      const double* row = w.data() + b * n;
      for (std::size_t j = 0; j < n; ++j) field[j] += sign * row[j];
      if (e < best_e && !within(e, best_e, kTrackTol)) {
        best_e = e;
        best.clear();
        best.push_back({e, state});
      } else if (within(e, best_e, kTrackTol)) {
        best_e = std::min(best_e, e);
        best.push_back({e, state});
        if (best.size() > 4096) {
          // Heavily degenerate spectrum: keep the lowest, then lexicographically smallest.
          std::sort(best.begin(), best.end(), [n](const Candidate& a, const Candidate& b) {
            if (a.energy != b.energy) return a.energy < b.energy;
            return lex_key(a.state, n) < lex_key(b.state, n);
          });
          best.resize(256);
        }
      }
    }
  });

  // Deterministic reduction: exact re-evaluation, then lexicographic ties.
  double global = found[0][0].energy;
  for (const auto& list : found) {
    for (const auto& cand : list) global = std::min(global, cand.energy);
  }
  BitVector best_x;
  double best_e = 0.0;
  bool have = false;
  for (const auto& list : found) {
    for (const auto& cand : list) {
      if (!within(cand.energy, global, 1e-8)) continue;
      BitVector x = state_bits(cand.state, n);
      const double e = energy(model, x);
      if (!have || (within(e, best_e, 1e-12) ? x < best_x : e < best_e)) {
        best_e = e;
        best_x = std::move(x);
        have = true;
      }
    }
  }

  ExactSolution out;
  out.best = best_x;
  if (n <= kMaxSpectrumVariables) {
    out.spectrum.resize(std::size_t{1} << n);
    parallel_for(out.spectrum.size(), [&](std::size_t s) {
      out.spectrum[s] = energy(model, state_bits(s, n));
    });
    std::sort(out.spectrum.begin(), out.spectrum.end());
  }
  out.selection.selected = selected_indices(best_x);
  out.selection.achieved_k = out.selection.selected.size();
  out.selection.num_aps = n;
  out.selection.best_energy = energy(model, best_x);
  out.selection.sampler = SamplerKind::Exact;
  out.selection.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

nlohmann::json to_json(const QuboModel& model) {
  nlohmann::json quad = nlohmann::json::array();
  for (const auto& q : model.quadratic) quad.push_back({{"i", q.i}, {"j", q.j}, {"v", q.value}});
  return {
      {"n", model.size()},
      {"linear", model.linear},
      {"quadratic", std::move(quad)},
      {"offset", model.offset},
      {"params",
       {{"alpha", model.params.alpha},
        {"eta", model.params.eta},
        {"k", model.params.k},
        {"metric", std::string(to_string(model.params.metric))}}},
  };
}

QuboModel qubo_from_json(const nlohmann::json& j) {
  QuboModel model;
  try {
    const auto n = j.at("n").get<std::size_t>();
    model.linear = j.at("linear").get<std::vector<double>>();
    if (model.linear.size() != n) throw ConfigError("linear length differs from n");
    for (const auto& t : j.at("quadratic")) {
      model.quadratic.push_back({t.at("i").get<std::uint32_t>(), t.at("j").get<std::uint32_t>(),
                                 t.at("v").get<double>()});
    }
    std::sort(model.quadratic.begin(), model.quadratic.end(),
              [](const auto& a, const auto& b) { return std::pair{a.i, a.j} < std::pair{b.i, b.j}; });
    model.offset = j.at("offset").get<double>();
    if (j.contains("params")) {
      const auto& p = j.at("params");
      model.params.alpha = p.value("alpha", model.params.alpha);
      model.params.eta = p.value("eta", model.params.eta);
      model.params.k = p.value("k", model.params.k);
      if (p.contains("metric")) model.params.metric = parse_metric(p.at("metric").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed QUBO document: ") + e.what());
  }
  model.validate();
  return model;
}

void write_qubo_json(const QuboModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

QuboModel read_qubo_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return qubo_from_json(j);
}

}  // namespace apsel
