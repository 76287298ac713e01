#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "esprior/core.hpp"
#include "esprior/numerics.hpp"

namespace esp {

/// Structured state identifier of a pre-unfolded HMM.
///
/// `level` counts the productive states on any run reaching the state; a
/// silent state carries the level of the productive stratum before it. The
/// meaning of `kind` and `f` is private to the model that issued the id.
struct StateId {
  std::uint32_t level = 0;
  std::uint16_t kind = 0;
  std::array<std::int32_t, 7> f{};

  friend auto operator<=>(const StateId&, const StateId&) = default;
};

struct StateIdHash {
  std::size_t operator()(const StateId& s) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(s.level);
    mix(s.kind);
    for (std::int32_t v : s.f) mix(static_cast<std::uint32_t>(v));
    return static_cast<std::size_t>(h);
  }
};

struct Arc {
  StateId to;
  LogMass mass;
};

/// Deterministic HMM on the expert set, enumerated lazily.
///
/// Implementations are immutable; all methods are reentrant. Arcs with zero
/// mass are never reported.
class HmmModel {
 public:
  virtual ~HmmModel() = default;

  /// Size of the label set (experts the model can emit).
  virtual std::size_t expert_count() const = 0;
  virtual std::vector<Arc> initial() const = 0;
  virtual std::vector<Arc> successors(const StateId& q) const = 0;
  virtual bool is_productive(const StateId& q) const = 0;
  /// Expert emitted by a productive state.
  virtual ExpertIndex label(const StateId& q) const = 0;
  /// Maximum number of consecutive silent states on any run.
  virtual std::size_t silent_depth_bound() const = 0;
  /// True if each expert sequence is produced by at most one sequence of
  /// productive states.
  virtual bool unambiguous() const { return false; }
  virtual std::string name() const = 0;
  virtual std::string describe(const StateId& q) const;
};

using ModelPtr = std::shared_ptr<const HmmModel>;

struct Violation {
  enum class Kind { normalization, silent_depth, level, label };
  Kind kind;
  std::string state;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  bool has(Violation::Kind k) const;
};

/// Explores every state with level < `levels` (plus the productive states
/// of level `levels`) and checks normalization, level monotonicity and the
/// declared silent-depth bound.
ValidationReport validate(const HmmModel& model, std::size_t levels,
                          double tolerance = 1e-9);

struct LevelCensus {
  std::size_t states = 0;
  std::size_t productive = 0;
  std::size_t arcs = 0;
};

/// Reachable states bucketed by level, for levels 0..`levels`.
std::vector<LevelCensus> census(const HmmModel& model, std::size_t levels);

/// Removes a silent, non-initial state by connecting each predecessor
/// directly to each of its successors with the product mass.
ModelPtr eliminate_silent(ModelPtr model, const StateId& state);

/// Prior mass of an expert sequence: the sum over runs whose productive
/// states emit exactly `experts`.
LogMass expert_sequence_prior(const HmmModel& model,
                              std::span<const ExpertIndex> experts);

}  // namespace esp
