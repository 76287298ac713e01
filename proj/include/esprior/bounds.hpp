#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "esprior/core.hpp"

namespace esp {

// Worst-case regret bounds, all in bits.

double bayes_bound(const Distribution& w, ExpertIndex e);

/// Cross entropy -a* log2 a - (1-a*) log2 (1-a), with 0 log 0 = 0. +inf when
/// it is undefined (a in {0,1} and a* != a).
double cross_entropy_bits(double alpha_star, double alpha);

/// n H(a*, a) + m log2 k, for a partition of n outcomes into m blocks.
double fixed_share_bound(std::size_t n, std::size_t m, std::size_t k, double alpha,
                         double alpha_star);

/// Switching rate of a partition: (m-1)/(n-1), or 0 when n = 1.
double switch_rate(std::size_t n, std::size_t m);

double universal_share_bound(std::size_t n);

/// (k-1)/2 log2(n/pi) + c. The constant c is not known in closed form.
double unimix_bound(std::size_t k, std::size_t n, double c);

/// m + m log2 k + log2 C(t_m + 1, m) + log2 m!, with t_m the start of the
/// last block (0-based). Accepts real m so it can be bisected.
double switch_bound(double m, double t_m, std::size_t k);

/// m (log2 k + log2(n/m) + 2 log2 log2(n/m + 1) + 3).
double run_length_bound(double n, double m, std::size_t k);

/// -log2 w(e) + n H(a*, a).
double overconfident_bound(const Distribution& w, ExpertIndex e, std::size_t n, double alpha,
                           double alpha_star);

struct BoundComparison {
  double switch_bits = 0.0;
  double run_length_bits = 0.0;
  bool switch_lower() const { return switch_bits < run_length_bits; }
};

/// Both bounds for m blocks, the last starting at n - 1.
BoundComparison compare_switch_vs_runlength(double n, double m, std::size_t k = 2);

/// Smallest m in [1, n] at which the run-length bound drops below the switch
/// bound, found by bisection on real m. Returns n if it never does.
double switch_runlength_crossover(double n, std::size_t k = 2, double tolerance = 1e-6);

struct Partition {
  /// Block starts (0-based) and their experts.
  std::vector<std::size_t> starts;
  std::vector<ExpertIndex> experts;
  /// Sequential log-loss of the partition's expert sequence, bits.
  double loss_bits = 0.0;

  std::size_t blocks() const { return starts.size(); }
  std::size_t last_start() const { return starts.empty() ? 0 : starts.back(); }
  std::vector<ExpertIndex> sequence(std::size_t n) const;
};

/// Lowest-loss expert sequence with at most `max_blocks` constant blocks.
/// Prefers fewer blocks on ties. Exact dynamic program, O(n k^2 m).
Partition best_partition(const ExpertList& experts, std::span<const Symbol> data,
                         std::size_t max_blocks);

struct BoundReport {
  std::string model;
  std::string comparator;
  double measured_bits = 0.0;  // model loss minus comparator loss
  double bound_bits = 0.0;
  std::size_t n = 0, m = 0, t_m = 0, k = 0;
  double alpha = 0.0, alpha_star = 0.0;
  /// False for bounds with unnamed constants: reported, not checked.
  bool asserted = true;
  std::string note;

  bool satisfied() const { return measured_bits <= bound_bits + 1e-6; }
};

}  // namespace esp
