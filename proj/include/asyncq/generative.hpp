#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "asyncq/mdp.hpp"
#include "asyncq/rng.hpp"
#include "asyncq/types.hpp"

namespace asyncq {

/// One draw from a sampling model: successor state and instant reward.
struct Outcome {
  StateId next = 0;
  double reward = 0.0;
};

/// Receives grouped draws from sample_batch: an outcome plus how many of
/// the batch's draws produced it.
using SampleSink = std::function<void(StateId next, double reward, std::int64_t count)>;

/**
 * Sampling access to an MDP: repeated calls at the same (i, a) are
 * independent draws from that pair's transition distribution, and the
 * returned reward lies in [0,1].
 *
 * Implementations are safe for concurrent calls as long as every thread
 * passes its own Rng.
 */
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  virtual StateId num_states() const = 0;
  virtual ActionId num_actions() const = 0;

  /// One independent draw at (i, a).
  virtual Outcome sample(StateId i, ActionId a, Rng& rng) const = 0;

  /// Draws `count` independent samples at (i, a) and reports them through
  /// `sink` in groups with multiplicities. The joint distribution of the
  /// reported multiset equals `count` sample() calls; the base
  /// implementation literally loops sample(), while subclasses with known
  /// outcome supports may draw the grouped counts jointly instead, which
  /// costs one pass over the support rather than `count` draws.
  virtual void sample_batch(StateId i, ActionId a, std::int64_t count, Rng& rng,
                            const SampleSink& sink) const;

  /// True if `i` counts as the goal for evaluation flags. Models without a
  /// goal concept keep the default (always false).
  virtual bool is_target(StateId i) const {
    (void)i;
    return false;
  }
};

/**
 * Generative view of an explicit TabularMdp.
 *
 * sample() inverts the row's cumulative distribution with one uniform
 * draw. sample_batch() draws the per-outcome counts of the whole batch
 * jointly via a chain of conditional binomial draws, which has exactly the
 * multinomial distribution of `count` independent single draws; used for
 * large prescribed sample counts where per-draw looping is infeasible.
 *
 * Holds a reference to the model; the model must outlive the sampler.
 */
class TabularSampler final : public GenerativeModel {
 public:
  explicit TabularSampler(const TabularMdp& mdp);

  StateId num_states() const override { return mdp_->num_states(); }
  ActionId num_actions() const override { return mdp_->num_actions(); }
  Outcome sample(StateId i, ActionId a, Rng& rng) const override;
  void sample_batch(StateId i, ActionId a, std::int64_t count, Rng& rng,
                    const SampleSink& sink) const override;

  const TabularMdp& mdp() const { return *mdp_; }

 private:
  const TabularMdp* mdp_;
  std::vector<double> cumulative_;  // per-row cumulative probabilities, CSR-aligned
};

}  // namespace asyncq
