#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "esprior/core.hpp"
#include "esprior/hmm.hpp"

namespace esp {

/// Forward-algorithm frontier: partial map from states to log-mass, kept in
/// insertion order so that every pass is deterministic.
class WeightMap {
 public:
  using Entry = std::pair<StateId, LogMass>;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  bool contains(const StateId& q) const { return index_.count(q) != 0; }
  LogMass at(const StateId& q) const;

  /// Adds `m` to the weight of `q`, inserting it if absent.
  void accumulate(const StateId& q, LogMass m);
  void assign(std::vector<Entry> entries);
  LogMass total() const;
  void clear();

 private:
  std::vector<Entry> entries_;
  std::unordered_map<StateId, std::size_t, StateIdHash> index_;
};

/// One processed interval [n-1, n): its states in the order they were
/// propagated (a topological order of the silent sub-DAG) with their arcs.
struct LevelTrace {
  std::vector<std::pair<StateId, std::vector<Arc>>> nodes;
};

struct ForwardOptions {
  /// Keep only the heaviest states carrying this fraction of mass after each
  /// loss update; unset disables trimming.
  std::optional<double> trim;
  /// Keep every interval's states and arcs (needed for backward passes).
  bool record_trace = false;
};

/// The generalized forward algorithm on a lazy HMM prior. The caller drives
/// it: `propagate` moves the frontier to the productive states of the next
/// level, `update` multiplies in the experts' probabilities of the outcome.
class ForwardPass {
 public:
  explicit ForwardPass(const HmmModel& model, ForwardOptions options = {});

  void propagate();
  /// `emission[e]` is the probability expert `e` gave the current outcome.
  void update(std::span<const LogMass> emission);

  /// Posterior on the expert about to be used; valid after `propagate`.
  Distribution next_expert() const;
  LogMass mass() const { return weights_.total(); }
  std::size_t level() const { return level_; }
  const WeightMap& weights() const { return weights_; }
  const HmmModel& model() const { return *model_; }

  /// Entry n is the number of (state, successor) pairs touched while
  /// propagating into level n; entry 0 is unused.
  const std::vector<std::size_t>& transitions_per_level() const { return transitions_; }
  std::size_t transitions_total() const;
  std::size_t peak_weights() const { return peak_weights_; }
  /// Entry n-1 describes interval [n-1, n); empty unless recording.
  const std::vector<LevelTrace>& trace() const { return trace_; }

 private:
  const HmmModel* model_;
  ForwardOptions options_;
  WeightMap weights_;
  std::size_t level_ = 0;
  std::vector<std::size_t> transitions_{0};
  std::size_t peak_weights_ = 0;
  std::vector<LevelTrace> trace_;
};

/// Online predictor combining an HMM prior with its experts. Each outcome is
/// consumed once.
class SequentialPredictor {
 public:
  SequentialPredictor(ModelPtr model, ExpertList experts,
                      ForwardOptions options = {});

  /// P(xi_{n+1} | x^n).
  Distribution next_expert() const;
  /// P(x_{n+1} | x^n); nullopt when some expert lacks full predictions.
  std::optional<Distribution> next_outcome() const;
  /// Consumes one outcome and returns P(x_{n+1} | x^n). Throws
  /// ZeroMarginalError when the data becomes impossible.
  LogMass observe(Symbol x);

  LogMass marginal() const { return marginal_; }
  std::span<const Symbol> history() const { return history_; }
  const ForwardPass& pass() const { return pass_; }
  const ExpertList& experts() const { return experts_; }

 private:
  ModelPtr model_;
  ExpertList experts_;
  ForwardPass pass_;
  std::vector<Symbol> history_;
  LogMass marginal_ = LogMass::one();
  /// Frontier mass right after the last propagate (before its update).
  LogMass pre_update_mass_ = LogMass::one();
};

struct ForwardResult {
  LogMass marginal = LogMass::one();
  /// Per step i (0-based): P(x_{i+1} | x^i).
  std::vector<LogMass> step_probability;
  /// Per step i: P(xi_{i+1} | x^i), plus one extra entry for the step after
  /// the data.
  std::vector<Distribution> next_expert;
  /// Per step i: P(x_{i+1} = . | x^i); empty in realized-advice mode.
  std::vector<Distribution> next_outcome;
  /// Per step i: frontier log-sum just before the loss update of step i+1.
  std::vector<LogMass> pre_update_mass;
  std::vector<std::size_t> transitions_per_level;
  std::size_t peak_weights = 0;
};

/// Forward algorithm over `data`. Throws ZeroMarginalError with the step
/// at which P(x^n) became zero.
ForwardResult forward_marginal(ModelPtr model, const ExpertList& experts,
                               std::span<const Symbol> data,
                               ForwardOptions options = {});

/// Per-time posterior on experts given the whole sample, n x k log-masses.
struct PosteriorGrid {
  Eigen::MatrixXd log_mass;

  std::size_t steps() const { return static_cast<std::size_t>(log_mass.rows()); }
  std::size_t experts() const { return static_cast<std::size_t>(log_mass.cols()); }
  double prob(std::size_t i, std::size_t e) const {
    return std::exp(log_mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)));
  }
};

/// Forward-backward over productive states, projected onto expert labels.
/// Throws ZeroMarginalError if P(x^n) = 0.
PosteriorGrid posterior_experts(const HmmModel& model, const ExpertList& experts,
                                std::span<const Symbol> data);

struct ExpertPath {
  std::vector<ExpertIndex> experts;
  LogMass joint = LogMass::zero();
};

/// Most probable expert sequence for unambiguous models. Silent paths
/// between consecutive productive states are summed, choices of productive
/// state are maximized; ties go to the lowest expert index.
ExpertPath viterbi_unambiguous(const HmmModel& model, const ExpertList& experts,
                               std::span<const Symbol> data);

/// Wraps a prior plus experts as a single forecasting system. Predictions
/// for extensions of the last queried history reuse the running forward
/// state; other histories are replayed from scratch.
ExpertPtr model_as_expert(ModelPtr model, ExpertList experts,
                          std::string name = "meta");

/// Per-step probabilities of the outcomes under every expert.
std::vector<LogMass> emission_row(const ExpertList& experts,
                                  std::span<const Symbol> history, Symbol next);

}  // namespace esp
