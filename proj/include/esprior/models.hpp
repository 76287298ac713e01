#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esprior/core.hpp"
#include "esprior/hmm.hpp"
#include "esprior/time_law.hpp"

namespace esp {

/// Standard Bayesian mixture: the expert is drawn once from `w`.
ModelPtr bayes(Distribution w);

/// Experts drawn i.i.d. from `alpha` at every step.
ModelPtr fixed_elementwise(Distribution alpha);

/// Elementwise mixture with a Jeffreys prior on the mixing weights. The
/// frontier has C(n+k-1, k-1) states at level n; asking for more than
/// `state_budget` throws StateBudgetExceeded. Supports k <= 6.
ModelPtr universal_elementwise(std::size_t k, double state_budget = 1e6);

/// Each step keeps the current expert with probability 1-alpha, otherwise
/// redraws one from `w` (possibly the same).
ModelPtr fixed_share(Distribution w, double alpha);

/// Fixed share with a Jeffreys prior on the switching rate.
ModelPtr universal_share(Distribution w);

/// Bayes over experts that each fall back to a uniform "safe" expert with
/// probability alpha. The safe expert has label k (= w.size()).
ModelPtr overconfident(Distribution w, double alpha);

/// Appends the uniform safe expert needed by `overconfident`.
ExpertList append_safe_expert(ExpertList experts, std::size_t alphabet_size);

struct SwitchConfig {
  /// Rate of the geometric law on the number of blocks.
  double theta = 0.5;
  TimeLaw pi_t = TimeLaw::inverse_polynomial();
  Distribution pi_k;
};

/// Two-band switch model: an unstable band that may switch again at times
/// drawn from pi_t, and an absorbing stable band.
ModelPtr switch_model(const SwitchConfig& cfg);

/// The switch model with the stable band removed and a constant escape
/// probability `theta`.
ModelPtr switch_unstable_only(Distribution pi_k, double theta);

/// Prior probability that the switch prior's expert sequence starts with
/// `experts`, by enumeration of the switch positions inside the prefix.
LogMass switch_prior_prefix(const SwitchConfig& cfg, std::span<const ExpertIndex> experts);

/// Run lengths between switches drawn from pi_t; new experts from `w`.
ModelPtr run_length(TimeLaw pi_t, Distribution w);

}  // namespace esp
