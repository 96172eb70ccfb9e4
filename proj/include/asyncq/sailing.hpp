#pragma once

#include <array>
#include <utility>

#include "asyncq/generative.hpp"
#include "asyncq/mdp.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/types.hpp"

namespace asyncq::sailing {

inline constexpr int kNumDirections = 8;

/// Compass headings indexed counterclockwise from east; adjacent indices
/// are 45 degrees apart, so index arithmetic mod 8 measures angles.
inline constexpr std::array<std::array<int, 2>, kNumDirections> kHeadings{{
    {{1, 0}},    // east
    {{1, 1}},    // northeast
    {{0, 1}},    // north
    {{-1, 1}},   // northwest
    {{-1, 0}},   // west
    {{-1, -1}},  // southwest
    {{0, -1}},   // south
    {{1, -1}},   // southeast
}};

/// Minimal angular difference between two headings, in 45-degree steps
/// (0..4).
int angle_steps(int heading_a, int heading_b);

/**
 * Sailing gridworld: a boat on a grid_size x grid_size board moves one cell
 * per step in one of eight compass directions, perturbed by Gaussian
 * position noise, while the wind rotates stochastically. Reaching the
 * target cell is absorbing with reward 1 per step; elsewhere the step
 * reward is d times the wind/heading angle in 45-degree units.
 */
struct SailingConfig {
  int grid_size = 20;
  double d = 0.05;        // reward per 45 degrees of wind/heading separation
  double sigma1 = 0.5;    // std dev of the everyday position noise
  double sigma2 = 2.0;    // extra noise spread when a vortex hits
  double vortex_p = 0.05; // per-step vortex probability
  int target_x = 10;
  int target_y = 10;

  int num_positions() const { return grid_size * grid_size; }
  int num_states() const { return num_positions() * kNumDirections; }

  /// Config with the target at the grid's center cell.
  static SailingConfig centered(int grid_size);
};

/// Throws ValidationError unless: grid_size >= 2, d >= 0 with 4*d <= 1
/// (keeps every reward in [0,1]), sigma1/sigma2 >= 0, vortex_p in [0,1],
/// target inside the grid.
void validate(const SailingConfig& cfg);

struct SailingState {
  int x = 0;
  int y = 0;
  int wind = 0;

  bool operator==(const SailingState&) const = default;
};

/// Packs (x, y, wind) into a dense id: (x*grid_size + y)*8 + wind.
StateId sailing_encode(const SailingState& state, const SailingConfig& cfg);

/// Inverts sailing_encode. Throws ValidationError on out-of-range ids.
SailingState sailing_decode(StateId id, const SailingConfig& cfg);

/// Step reward: 1 when at_target, else d * angle_steps(wind, action).
double sailing_reward(int wind, int action, const SailingConfig& cfg, bool at_target);

/// One environment step. At the target the state is returned unchanged
/// with reward 1 (absorbing; the wind stays frozen too, which is
/// invisible to behavior since every target state pays the same).
/// Elsewhere: position moves by the action's heading plus Gaussian noise
/// on each axis (std dev sigma1, or sqrt(sigma1^2+sigma2^2) when the
/// per-step vortex coin with probability vortex_p comes up, one coin for
/// both axes), rounded to nearest integer and clamped to the grid; the
/// wind rotates by k steps of 45 degrees with probabilities
/// {0: 0.3, ±1: 0.2, ±2: 0.1, ±3: 0.04, +4: 0.02}.
std::pair<SailingState, double> sailing_sample(const SailingState& state, int action,
                                               const SailingConfig& cfg, Rng& rng);

/// Exact explicit model of the sampler's dynamics, computed by enumerating
/// the discretized Gaussian mass per destination cell (CDF differences
/// over the rounding intervals; boundary cells absorb the clamped tails),
/// mixed over the vortex coin and the wind kernel. Refuses grids with more
/// than 20000 encoded states. The result passes validate_mdp.
TabularMdp sailing_tabularize(const SailingConfig& cfg, double gamma);

/// Generative access to the sailing dynamics at any grid size.
class SailingModel final : public GenerativeModel {
 public:
  explicit SailingModel(const SailingConfig& cfg);

  StateId num_states() const override { return cfg_.num_states(); }
  ActionId num_actions() const override { return kNumDirections; }
  Outcome sample(StateId i, ActionId a, Rng& rng) const override;
  bool is_target(StateId i) const override;

  const SailingConfig& config() const { return cfg_; }

 private:
  SailingConfig cfg_;
};

}  // namespace asyncq::sailing
