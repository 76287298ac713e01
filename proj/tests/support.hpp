#pragma once

// Test-only fixtures and exhaustive oracles. Nothing here goes through
// ForwardPass: priors are summed over explicit runs of the HMM.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "esprior/core.hpp"
#include "esprior/hmm.hpp"

namespace esp::testing {

using Rng = std::mt19937_64;

inline std::vector<double> random_probs(Rng& rng, std::size_t k, double floor = 0.02) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (auto& v : p) s += (v = ex(rng) + floor);
  for (auto& v : p) v /= s;
  return p;
}

inline Distribution random_dist(Rng& rng, std::size_t k, double floor = 0.02) {
  const auto p = random_probs(rng, k, floor);
  return Distribution::from_probs(p);
}

inline ExpertList random_constant_experts(Rng& rng, std::size_t k, std::size_t alphabet) {
  ExpertList xs;
  for (std::size_t e = 0; e < k; ++e)
    xs.push_back(constant_expert(random_dist(rng, alphabet), "e" + std::to_string(e)));
  return xs;
}

inline std::vector<Symbol> random_data(Rng& rng, std::size_t n, std::size_t alphabet) {
  std::uniform_int_distribution<std::size_t> u(0, alphabet - 1);
  std::vector<Symbol> d(n);
  for (auto& x : d) x = u(rng);
  return d;
}

inline Distribution dist(std::initializer_list<double> p) {
  std::vector<double> v(p);
  return Distribution::from_probs(v);
}

/// Calls f on every sequence in {0..k-1}^n, lexicographic order.
inline void for_each_sequence(std::size_t k, std::size_t n,
                              const std::function<void(const std::vector<ExpertIndex>&)>& f) {
  std::vector<ExpertIndex> s(n, 0);
  while (true) {
    f(s);
    std::size_t i = n;
    while (i > 0 && ++s[i - 1] == k) s[--i] = 0;
    if (i == 0) return;
  }
}

/// Prior of an expert sequence by depth-first summation over HMM runs, in
/// linear scale.
inline double run_prior(const HmmModel& m, const std::vector<ExpertIndex>& seq) {
  if (seq.empty()) return 1.0;
  std::function<double(const StateId&, std::size_t, int)> walk =
      [&](const StateId& q, std::size_t pos, int silent_run) -> double {
    if (silent_run > 64) throw std::runtime_error("runaway silent run");
    if (m.is_productive(q)) {
      if (m.label(q) != seq[pos]) return 0.0;
      if (pos + 1 == seq.size()) return 1.0;
      double s = 0.0;
      for (const Arc& a : m.successors(q)) s += a.mass.prob() * walk(a.to, pos + 1, 0);
      return s;
    }
    double s = 0.0;
    for (const Arc& a : m.successors(q)) s += a.mass.prob() * walk(a.to, pos, silent_run + 1);
    return s;
  };
  double total = 0.0;
  for (const Arc& a : m.initial()) total += a.mass.prob() * walk(a.to, 0, 0);
  return total;
}

/// prod_i P_{seq_i}(x_i | x^{i-1}), linear scale.
inline double likelihood(const ExpertList& xs, const std::vector<Symbol>& data,
                         const std::vector<ExpertIndex>& seq) {
  double p = 1.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    p *= xs[seq[i]]->probability(std::span<const Symbol>(data).first(i), data[i]).prob();
  return p;
}

inline double brute_marginal(const HmmModel& m, const ExpertList& xs,
                             const std::vector<Symbol>& data) {
  double total = 0.0;
  for_each_sequence(m.expert_count(), data.size(), [&](const auto& s) {
    total += run_prior(m, s) * likelihood(xs, data, s);
  });
  return total;
}

/// post[i][e] = P(xi_{i+1} = e | x^n).
inline std::vector<std::vector<double>> brute_posterior(const HmmModel& m, const ExpertList& xs,
                                                        const std::vector<Symbol>& data) {
  const std::size_t n = data.size(), k = m.expert_count();
  std::vector<std::vector<double>> post(n, std::vector<double>(k, 0.0));
  double total = 0.0;
  for_each_sequence(k, n, [&](const auto& s) {
    const double j = run_prior(m, s) * likelihood(xs, data, s);
    total += j;
    for (std::size_t i = 0; i < n; ++i) post[i][s[i]] += j;
  });
  for (auto& row : post)
    for (auto& v : row) v /= total;
  return post;
}

struct BruteMap {
  std::vector<ExpertIndex> seq;
  double joint = -1.0;
};

/// Exhaustive argmax; the first sequence in lexicographic order wins ties.
inline BruteMap brute_map(const HmmModel& m, const ExpertList& xs,
                          const std::vector<Symbol>& data) {
  BruteMap best;
  for_each_sequence(m.expert_count(), data.size(), [&](const auto& s) {
    const double j = run_prior(m, s) * likelihood(xs, data, s);
    if (j > best.joint) best = {s, j};
  });
  return best;
}

inline double rel_log_diff(double a, double b) {
  const double la = std::log(a), lb = std::log(b);
  return std::abs(la - lb) / std::max(1.0, std::abs(lb));
}

}  // namespace esp::testing
