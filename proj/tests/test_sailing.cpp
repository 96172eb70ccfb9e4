#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "asyncq/mdp.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/sailing.hpp"
#include "asyncq/types.hpp"

using namespace asyncq;
using namespace asyncq::sailing;

TEST_CASE("angle_steps measures minimal heading separation") {
  CHECK(angle_steps(0, 0) == 0);
  CHECK(angle_steps(0, 1) == 1);
  CHECK(angle_steps(0, 4) == 4);
  CHECK(angle_steps(0, 7) == 1);  // wraparound
  CHECK(angle_steps(1, 7) == 2);
  CHECK(angle_steps(2, 6) == 4);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      CHECK(angle_steps(a, b) == angle_steps(b, a));
      CHECK(angle_steps(a, b) >= 0);
      CHECK(angle_steps(a, b) <= 4);
    }
}

TEST_CASE("headings are unit king moves ordered counterclockwise from east") {
  CHECK(kHeadings[0][0] == 1);
  CHECK(kHeadings[0][1] == 0);
  CHECK(kHeadings[2][0] == 0);
  CHECK(kHeadings[2][1] == 1);
  CHECK(kHeadings[4][0] == -1);
  CHECK(kHeadings[4][1] == 0);
  // Consecutive headings differ by 45 degrees.
  for (int h = 0; h < 8; ++h) CHECK(angle_steps(h, (h + 1) % 8) == 1);
}

TEST_CASE("state encoding is a bijection onto the id range") {
  const SailingConfig cfg = SailingConfig::centered(3);
  std::set<StateId> ids;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      for (int w = 0; w < 8; ++w) {
        const SailingState s{x, y, w};
        const StateId id = sailing_encode(s, cfg);
        CHECK(id >= 0);
        CHECK(id < cfg.num_states());
        CHECK(sailing_decode(id, cfg) == s);
        ids.insert(id);
      }
  CHECK(ids.size() == static_cast<std::size_t>(cfg.num_states()));
  CHECK_THROWS_AS(sailing_decode(-1, cfg), ValidationError);
  CHECK_THROWS_AS(sailing_decode(cfg.num_states(), cfg), ValidationError);
}

TEST_CASE("rewards pay d per 45 degrees of separation, 1 at the target") {
  const SailingConfig cfg = SailingConfig::centered(20);  // d = 0.05
  CHECK(sailing_reward(0, 0, cfg, false) == doctest::Approx(0.0));
  CHECK(sailing_reward(0, 2, cfg, false) == doctest::Approx(0.10));
  CHECK(sailing_reward(0, 4, cfg, false) == doctest::Approx(0.20));
  CHECK(sailing_reward(6, 1, cfg, false) == doctest::Approx(0.15));
  CHECK(sailing_reward(3, 3, cfg, true) == doctest::Approx(1.0));
}

TEST_CASE("config validation rejects out-of-range settings") {
  CHECK_NOTHROW(validate(SailingConfig::centered(20)));
  SailingConfig cfg = SailingConfig::centered(20);

  cfg.grid_size = 1;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = SailingConfig::centered(20);

  cfg.d = -0.01;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg.d = 0.3;  // 4d > 1 would break the reward range
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = SailingConfig::centered(20);

  cfg.vortex_p = 1.5;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = SailingConfig::centered(20);

  cfg.target_x = 20;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
}

TEST_CASE("the target is absorbing with unit reward") {
  const SailingConfig cfg = SailingConfig::centered(5);
  const SailingState at_target{cfg.target_x, cfg.target_y, 3};
  Rng rng(42);
  for (int k = 0; k < 20; ++k) {
    const auto [next, reward] = sailing_sample(at_target, k % 8, cfg, rng);
    CHECK(next == at_target);
    CHECK(reward == 1.0);
  }
}

TEST_CASE("noiseless motion follows the heading and clamps at walls") {
  SailingConfig cfg = SailingConfig::centered(5);
  cfg.sigma1 = 0.0;
  cfg.sigma2 = 0.0;
  cfg.vortex_p = 0.0;
  Rng rng(7);

  const auto [moved, r1] = sailing_sample({1, 1, 0}, 1, cfg, rng);  // northeast
  CHECK(moved.x == 2);
  CHECK(moved.y == 2);
  CHECK(r1 == doctest::Approx(cfg.d * 1));

  const auto [pinned, r2] = sailing_sample({0, 0, 4}, 5, cfg, rng);  // southwest at corner
  CHECK(pinned.x == 0);
  CHECK(pinned.y == 0);
  CHECK(r2 == doctest::Approx(cfg.d * 1));

  const auto [edge, r3] = sailing_sample({4, 2, 0}, 0, cfg, rng);  // east at east wall
  CHECK(edge.x == 4);
  CHECK(edge.y == 2);
}

TEST_CASE("wind rotation follows the mixing kernel") {
  SailingConfig cfg = SailingConfig::centered(5);
  cfg.sigma1 = 0.0;
  cfg.sigma2 = 0.0;
  cfg.vortex_p = 0.0;
  Rng rng(2026);

  // Rotation probabilities by (new - old) mod 8:
  // 0:0.3, +1:0.2, +2:0.1, +3:0.04, +4:0.02, -3:0.04, -2:0.1, -1:0.2.
  const std::vector<double> expect{0.3, 0.2, 0.1, 0.04, 0.02, 0.04, 0.1, 0.2};
  const int n = 50000;
  std::vector<int> counts(8, 0);
  const SailingState from{0, 1, 5};  // off-target so the wind keeps mixing
  for (int k = 0; k < n; ++k) {
    const auto [next, reward] = sailing_sample(from, 0, cfg, rng);
    ++counts[((next.wind - from.wind) % 8 + 8) % 8];
  }
  for (int diff = 0; diff < 8; ++diff) {
    const double freq = static_cast<double>(counts[diff]) / n;
    const double se = std::sqrt(expect[diff] * (1 - expect[diff]) / n);
    CHECK(std::abs(freq - expect[diff]) <= 4 * se);
  }
}

TEST_CASE("tabularize matches the sampler's dynamics") {
  SailingConfig cfg = SailingConfig::centered(3);
  cfg.sigma1 = 0.5;
  cfg.sigma2 = 1.0;
  cfg.vortex_p = 0.3;
  const TabularMdp mdp = sailing_tabularize(cfg, 0.9);
  CHECK_NOTHROW(validate_mdp(mdp));
  CHECK(mdp.num_states() == cfg.num_states());
  CHECK(mdp.num_actions() == 8);

  // Target rows are pure self-loops paying 1.
  for (int w = 0; w < 8; ++w) {
    const StateId target = sailing_encode({cfg.target_x, cfg.target_y, w}, cfg);
    for (ActionId a = 0; a < 8; ++a) {
      const auto row = mdp.row(target, a);
      REQUIRE(row.size() == 1);
      CHECK(row[0].next == target);
      CHECK(row[0].prob == doctest::Approx(1.0));
      CHECK(row[0].reward == doctest::Approx(1.0));
    }
  }

  // Empirical next-state frequencies track the tabularized probabilities.
  const SailingModel sampler(cfg);
  const StateId from = sailing_encode({0, 1, 2}, cfg);
  const ActionId action = 3;
  Rng rng(11);
  const int n = 40000;
  std::map<StateId, int> counts;
  for (int k = 0; k < n; ++k) {
    const Outcome o = sampler.sample(from, action, rng);
    ++counts[o.next];
    CHECK(o.reward == doctest::Approx(mdp.mean_reward(from, action)));
  }
  double covered = 0.0;
  for (const Transition& t : mdp.row(from, action)) {
    covered += t.prob;
    if (t.prob < 0.005) continue;  // skip noise-level outcomes
    const double freq = static_cast<double>(counts[t.next]) / n;
    const double se = std::sqrt(t.prob * (1 - t.prob) / n);
    CHECK(std::abs(freq - t.prob) <= 4.5 * se);
  }
  CHECK(covered == doctest::Approx(1.0));
}

TEST_CASE("tabularize refuses oversized grids") {
  // 51 * 51 * 8 = 20808 encoded states crosses the explicit-model line.
  CHECK_THROWS_AS(sailing_tabularize(SailingConfig::centered(51), 0.9), ValidationError);
  CHECK_NOTHROW(sailing_tabularize(SailingConfig::centered(10), 0.9));
}

TEST_CASE("SailingModel flags exactly the target cell's states") {
  const SailingConfig cfg = SailingConfig::centered(4);
  const SailingModel model(cfg);
  CHECK(model.num_states() == cfg.num_states());
  CHECK(model.num_actions() == 8);
  int flagged = 0;
  for (StateId i = 0; i < cfg.num_states(); ++i)
    if (model.is_target(i)) {
      ++flagged;
      const SailingState s = sailing_decode(i, cfg);
      CHECK(s.x == cfg.target_x);
      CHECK(s.y == cfg.target_y);
    }
  CHECK(flagged == 8);  // one per wind direction
}
