#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "esprior/core.hpp"
#include "esprior/models.hpp"

namespace esp {

struct SwitchMap {
  /// max over expert sequences of P(x^n, xi^n).
  LogMass probability = LogMass::one();
  std::vector<ExpertIndex> sequence;
  /// Table cells filled; grows linearly in n for fixed k.
  std::size_t work = 0;
};

/// MAP expert sequence under the switch prior in O(n k) time and space.
/// A forward sweep keeps the best unstable-band prefixes, a backward sweep
/// the total mass of a constant final block; the answer maximizes their
/// product over the start of that block.
SwitchMap switch_map(const SwitchConfig& cfg, const ExpertList& experts,
                     std::span<const Symbol> data);

inline LogMass map_probability(const SwitchConfig& cfg, const ExpertList& experts,
                               std::span<const Symbol> data) {
  return switch_map(cfg, experts, data).probability;
}

inline std::vector<ExpertIndex> map_sequence(const SwitchConfig& cfg, const ExpertList& experts,
                                             std::span<const Symbol> data) {
  return switch_map(cfg, experts, data).sequence;
}

}  // namespace esp
