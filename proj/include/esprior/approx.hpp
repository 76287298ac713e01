#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "esprior/core.hpp"
#include "esprior/hmm.hpp"

namespace esp {

using WeightEntry = std::pair<StateId, LogMass>;

/// Keeps the heaviest states (ties by StateId order) until they carry at
/// least a fraction `p` of the mass, then rescales them to the original
/// total. Survivors keep their input order.
std::vector<WeightEntry> trim_frontier(std::span<const WeightEntry> weights, double p);

/// Per step, the expert giving the realized outcome the highest probability;
/// ties to the lowest index.
std::vector<ExpertIndex> ml_estimate(const ExpertList& experts, std::span<const Symbol> data);

/// Prior on the next expert given a history of (estimated) experts.
class SequentialPrior {
 public:
  virtual ~SequentialPrior() = default;
  virtual std::size_t expert_count() const = 0;
  virtual void reset() = 0;
  virtual Distribution next() const = 0;
  virtual void observe(ExpertIndex e) = 0;
};

/// (count(e) + 1) / (n + k).
std::unique_ptr<SequentialPrior> laplace_successor(std::size_t k);

/// Conditionals pi(xi_{n+1} | xi^n) of an HMM prior.
std::unique_ptr<SequentialPrior> hmm_conditional(ModelPtr model);

struct MlConditioned {
  LogMass marginal = LogMass::one();
  std::vector<LogMass> step_probability;
  std::vector<ExpertIndex> estimate;
  /// Prior on the expert used at each step, given the earlier estimates.
  std::vector<Distribution> prior;
};

/// prod_i sum_xi pi(xi | ml^{i-1}) P_xi(x_i | x^{i-1}). Throws
/// ZeroMarginalError if a step gets probability zero.
MlConditioned ml_conditioned_marginal(SequentialPrior& prior, const ExpertList& experts,
                                      std::span<const Symbol> data);

/// Relative entropy in nats; +inf if q misses part of p's support.
double kl_divergence(const Distribution& p, const Distribution& q);

}  // namespace esp
