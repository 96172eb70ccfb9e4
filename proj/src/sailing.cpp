#include "asyncq/sailing.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace asyncq::sailing {

namespace {

// Wind rotation kernel: offset in 45-degree steps, base probability. The
// order is fixed so cumulative sampling is deterministic; probabilities
// are normalized once to make the row sum exactly 1 in double precision.
struct WindStep {
  int offset;
  double prob;
};
constexpr std::array<WindStep, 8> kWindKernelRaw{{
    {0, 0.30},
    {+1, 0.20},
    {-1, 0.20},
    {+2, 0.10},
    {-2, 0.10},
    {+3, 0.04},
    {-3, 0.04},
    {+4, 0.02},
}};

const std::array<WindStep, 8>& wind_kernel() {
  static const std::array<WindStep, 8> normalized = [] {
    std::array<WindStep, 8> k = kWindKernelRaw;
    double total = 0.0;
    for (const WindStep& w : k) total += w.prob;
    for (WindStep& w : k) w.prob /= total;
    return k;
  }();
  return normalized;
}

int wrap8(int k) { return ((k % 8) + 8) % 8; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Probability mass of each grid cell along one axis when a point at
// continuous position mu is perturbed by N(0, sigma^2), rounded to the
// nearest integer, and clamped to [0, g-1]. Boundary cells absorb the
// clamped tails. sigma = 0 degenerates to a point mass.
std::vector<double> axis_cell_mass(int g, double mu, double sigma) {
  std::vector<double> mass(static_cast<std::size_t>(g), 0.0);
  if (sigma == 0.0) {
    const int c = std::clamp<int>(static_cast<int>(std::lround(mu)), 0, g - 1);
    mass[c] = 1.0;
    return mass;
  }
  for (int c = 0; c < g; ++c) {
    const double lo = (c == 0) ? 0.0 : normal_cdf((c - 0.5 - mu) / sigma);
    const double hi = (c == g - 1) ? 1.0 : normal_cdf((c + 0.5 - mu) / sigma);
    mass[c] = hi - lo;
  }
  return mass;
}

}  // namespace

int angle_steps(int heading_a, int heading_b) {
  const int d = std::abs(wrap8(heading_a) - wrap8(heading_b)) % 8;
  return std::min(d, 8 - d);
}

SailingConfig SailingConfig::centered(int grid_size) {
  SailingConfig cfg;
  cfg.grid_size = grid_size;
  cfg.target_x = grid_size / 2;
  cfg.target_y = grid_size / 2;
  return cfg;
}

void validate(const SailingConfig& cfg) {
  if (cfg.grid_size < 2) throw ValidationError("sailing: grid_size must be >= 2");
  if (!(cfg.d >= 0.0) || !(4.0 * cfg.d <= 1.0))
    throw ValidationError("sailing: d must satisfy 0 <= d and 4*d <= 1");
  if (!(cfg.sigma1 >= 0.0) || !(cfg.sigma2 >= 0.0))
    throw ValidationError("sailing: sigma1 and sigma2 must be nonnegative");
  if (!(cfg.vortex_p >= 0.0 && cfg.vortex_p <= 1.0))
    throw ValidationError("sailing: vortex_p must lie in [0,1]");
  if (cfg.target_x < 0 || cfg.target_x >= cfg.grid_size || cfg.target_y < 0 ||
      cfg.target_y >= cfg.grid_size)
    throw ValidationError("sailing: target outside the grid");
}

StateId sailing_encode(const SailingState& state, const SailingConfig& cfg) {
  const int g = cfg.grid_size;
  if (state.x < 0 || state.x >= g || state.y < 0 || state.y >= g || state.wind < 0 ||
      state.wind >= kNumDirections)
    throw ValidationError("sailing: state outside the grid");
  return static_cast<StateId>((state.x * g + state.y) * kNumDirections + state.wind);
}

SailingState sailing_decode(StateId id, const SailingConfig& cfg) {
  const int g = cfg.grid_size;
  if (id < 0 || id >= static_cast<StateId>(cfg.num_states()))
    throw ValidationError("sailing: encoded state id out of range");
  SailingState s;
  s.wind = id % kNumDirections;
  const int pos = id / kNumDirections;
  s.x = pos / g;
  s.y = pos % g;
  return s;
}

double sailing_reward(int wind, int action, const SailingConfig& cfg, bool at_target) {
  if (at_target) return 1.0;
  return cfg.d * angle_steps(wind, action);
}

std::pair<SailingState, double> sailing_sample(const SailingState& state, int action,
                                               const SailingConfig& cfg, Rng& rng) {
  if (state.x == cfg.target_x && state.y == cfg.target_y)
    return {state, 1.0};  // absorbing goal
  const double reward = sailing_reward(state.wind, action, cfg, false);

  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const bool vortex = cfg.vortex_p > 0.0 && uni(rng) < cfg.vortex_p;
  const double sigma =
      vortex ? std::sqrt(cfg.sigma1 * cfg.sigma1 + cfg.sigma2 * cfg.sigma2) : cfg.sigma1;

  double eta_x = 0.0, eta_y = 0.0;
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    eta_x = noise(rng);
    eta_y = noise(rng);
  }
  const auto& heading = kHeadings[static_cast<std::size_t>(action)];
  const int g = cfg.grid_size;
  SailingState next;
  next.x = std::clamp<int>(static_cast<int>(std::lround(state.x + heading[0] + eta_x)), 0, g - 1);
  next.y = std::clamp<int>(static_cast<int>(std::lround(state.y + heading[1] + eta_y)), 0, g - 1);

  const double u = uni(rng);
  double acc = 0.0;
  int offset = wind_kernel().back().offset;
  for (const WindStep& w : wind_kernel()) {
    acc += w.prob;
    if (u < acc) {
      offset = w.offset;
      break;
    }
  }
  next.wind = wrap8(state.wind + offset);
  return {next, reward};
}

TabularMdp sailing_tabularize(const SailingConfig& cfg, double gamma) {
  validate(cfg);
  constexpr int kStateGuard = 20000;
  if (cfg.num_states() > kStateGuard)
    throw ValidationError("sailing: refusing to materialize " +
                          std::to_string(cfg.num_states()) + " states (guard " +
                          std::to_string(kStateGuard) + ")");
  const int g = cfg.grid_size;
  TabularMdp mdp(cfg.num_states(), kNumDirections, gamma);

  const double sigma_mild = cfg.sigma1;
  const double sigma_vortex = std::sqrt(cfg.sigma1 * cfg.sigma1 + cfg.sigma2 * cfg.sigma2);
  // Mass below this threshold is dropped; with <= 20000 destination cells
  // per row the total dropped mass stays far below the row-sum tolerance,
  // and rows are renormalized afterwards anyway.
  constexpr double kPruneEps = 1e-17;

  std::vector<double> pos_mass(static_cast<std::size_t>(g) * g);
  for (int x = 0; x < g; ++x) {
    for (int y = 0; y < g; ++y) {
      const bool at_target = (x == cfg.target_x && y == cfg.target_y);
      for (int a = 0; a < kNumDirections && !at_target; ++a) {
        const double mu_x = x + kHeadings[static_cast<std::size_t>(a)][0];
        const double mu_y = y + kHeadings[static_cast<std::size_t>(a)][1];
        // Position distribution: vortex mixture of per-axis products (one
        // coin for both axes, so mix the 2-D products, not the axes).
        std::fill(pos_mass.begin(), pos_mass.end(), 0.0);
        for (int branch = 0; branch < 2; ++branch) {
          const double weight = branch == 0 ? 1.0 - cfg.vortex_p : cfg.vortex_p;
          if (weight == 0.0) continue;
          const double sigma = branch == 0 ? sigma_mild : sigma_vortex;
          const std::vector<double> mx = axis_cell_mass(g, mu_x, sigma);
          const std::vector<double> my = axis_cell_mass(g, mu_y, sigma);
          for (int cx = 0; cx < g; ++cx) {
            if (mx[cx] == 0.0) continue;
            const double wx = weight * mx[cx];
            double* dst = pos_mass.data() + static_cast<std::size_t>(cx) * g;
            for (int cy = 0; cy < g; ++cy) dst[cy] += wx * my[cy];
          }
        }
        for (int w = 0; w < kNumDirections; ++w) {
          const StateId from = sailing_encode({x, y, w}, cfg);
          const double r = sailing_reward(w, a, cfg, false);
          double row_sum = 0.0;
          struct Entry {
            StateId j;
            double p;
          };
          std::vector<Entry> entries;
          entries.reserve(64);
          for (int cx = 0; cx < g; ++cx) {
            const double* src = pos_mass.data() + static_cast<std::size_t>(cx) * g;
            for (int cy = 0; cy < g; ++cy) {
              const double pm = src[cy];
              if (pm < kPruneEps) continue;
              for (const WindStep& ws : wind_kernel()) {
                const double p = pm * ws.prob;
                if (p < kPruneEps) continue;
                entries.push_back(
                    {sailing_encode({cx, cy, wrap8(w + ws.offset)}, cfg), p});
                row_sum += p;
              }
            }
          }
          // Renormalize the kept mass so validate_mdp's 1e-12 row-sum
          // check is immune to pruning and CDF rounding residue.
          for (const Entry& e : entries)
            mdp.add_transition(from, a, e.j, e.p / row_sum, r);
        }
      }
      if (at_target) {
        for (int w = 0; w < kNumDirections; ++w) {
          const StateId from = sailing_encode({x, y, w}, cfg);
          for (int a = 0; a < kNumDirections; ++a)
            mdp.add_transition(from, a, from, 1.0, 1.0);
        }
      }
    }
  }
  mdp.finalize();
  return mdp;
}

SailingModel::SailingModel(const SailingConfig& cfg) : cfg_(cfg) { validate(cfg); }

Outcome SailingModel::sample(StateId i, ActionId a, Rng& rng) const {
  const SailingState s = sailing_decode(i, cfg_);
  const auto [next, reward] = sailing_sample(s, a, cfg_, rng);
  return {sailing_encode(next, cfg_), reward};
}

bool SailingModel::is_target(StateId i) const {
  const SailingState s = sailing_decode(i, cfg_);
  return s.x == cfg_.target_x && s.y == cfg_.target_y;
}

}  // namespace asyncq::sailing
