#include "esprior/bounds.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "esprior/errors.hpp"

namespace esp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log2_factorial(double m) { return std::lgamma(m + 1.0) / std::numbers::ln2; }

double log2_choose(double a, double b) {
  if (b < 0.0 || b > a) return -kInf;
  return log2_factorial(a) - log2_factorial(b) - log2_factorial(a - b);
}

}  // namespace

double bayes_bound(const Distribution& w, ExpertIndex e) {
  if (e >= w.size()) throw InputError("expert index out of range");
  return to_bits(w[e]);
}

double cross_entropy_bits(double a_star, double a) {
  if (!(a_star >= 0.0 && a_star <= 1.0 && a >= 0.0 && a <= 1.0))
    throw InputError("rates must lie in [0, 1]");
  auto term = [](double weight, double p) {
    if (weight == 0.0) return 0.0;
    if (p == 0.0) return kInf;
    return -weight * std::log2(p);
  };
  return term(a_star, a) + term(1.0 - a_star, 1.0 - a);
}

double fixed_share_bound(std::size_t n, std::size_t m, std::size_t k, double alpha,
                         double alpha_star) {
  return static_cast<double>(n) * cross_entropy_bits(alpha_star, alpha) +
         static_cast<double>(m) * std::log2(static_cast<double>(k));
}

double switch_rate(std::size_t n, std::size_t m) {
  if (m == 0 || m > n) throw InputError("need 1 <= m <= n blocks");
  return n <= 1 ? 0.0 : static_cast<double>(m - 1) / static_cast<double>(n - 1);
}

double universal_share_bound(std::size_t n) {
  if (n == 0) throw InputError("n must be positive");
  return 1.0 + 0.5 * std::log2(static_cast<double>(n));
}

double unimix_bound(std::size_t k, std::size_t n, double c) {
  if (k == 0 || n == 0) throw InputError("k and n must be positive");
  return (static_cast<double>(k) - 1.0) / 2.0 *
             std::log2(static_cast<double>(n) / std::numbers::pi) +
         c;
}

double switch_bound(double m, double t_m, std::size_t k) {
  if (m < 1.0) throw InputError("need at least one block");
  return m + m * std::log2(static_cast<double>(k)) + log2_choose(t_m + 1.0, m) +
         log2_factorial(m);
}

double run_length_bound(double n, double m, std::size_t k) {
  if (m <= 0.0 || n <= 0.0) throw InputError("n and m must be positive");
  const double r = n / m;
  return m * (std::log2(static_cast<double>(k)) + std::log2(r) + 2.0 * std::log2(std::log2(r + 1.0)) +
              3.0);
}

double overconfident_bound(const Distribution& w, ExpertIndex e, std::size_t n, double alpha,
                           double alpha_star) {
  return bayes_bound(w, e) + static_cast<double>(n) * cross_entropy_bits(alpha_star, alpha);
}

BoundComparison compare_switch_vs_runlength(double n, double m, std::size_t k) {
  if (m < 1.0 || m > n) throw InputError("need 1 <= m <= n");
  return {switch_bound(m, n - 1.0, k), run_length_bound(n, m, k)};
}

double switch_runlength_crossover(double n, std::size_t k, double tolerance) {
  auto gap = [&](double m) {
    const auto c = compare_switch_vs_runlength(n, m, k);
    return c.run_length_bits - c.switch_bits;  // positive while switch wins
  };
  double lo = 1.0, hi = n;
  if (gap(lo) <= 0.0) return lo;
  if (gap(hi) > 0.0) return hi;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? lo : hi) = mid;
  }
  return hi;
}

std::vector<ExpertIndex> Partition::sequence(std::size_t n) const {
  std::vector<ExpertIndex> s(n);
  for (std::size_t b = 0; b < starts.size(); ++b) {
    const std::size_t end = b + 1 < starts.size() ? starts[b + 1] : n;
    for (std::size_t i = starts[b]; i < end; ++i) s[i] = experts[b];
  }
  return s;
}

Partition best_partition(const ExpertList& experts, std::span<const Symbol> data,
                         std::size_t max_blocks) {
  const std::size_t n = data.size(), k = experts.size();
  if (k == 0) throw InputError("no experts");
  Partition p;
  if (n == 0) return p;
  if (max_blocks == 0) throw InputError("need at least one block");
  const std::size_t M = std::min(max_blocks, n);

  // cost[i][e]: bits expert e pays for outcome i.
  std::vector<std::vector<double>> cost(n, std::vector<double>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = 0; e < k; ++e)
      cost[i][e] = to_bits(experts[e]->probability(data.first(i), data[i]));

  // f[i][b][e]: best loss of x_1..x_{i+1} with b+1 blocks, the last on e.
  struct Cell {
    double v = kInf;
    bool fresh = false;  // block started here
    std::size_t from = 0;  // previous expert when fresh
  };
  std::vector<std::vector<std::vector<Cell>>> f(
      n, std::vector<std::vector<Cell>>(M, std::vector<Cell>(k)));
  for (std::size_t e = 0; e < k; ++e) f[0][0][e] = {cost[0][e], true, 0};
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t b = 0; b < M; ++b) {
      // Best predecessor for starting a new block.
      double best = kInf;
      std::size_t arg = 0;
      if (b > 0)
        for (std::size_t e = 0; e < k; ++e)
          if (f[i - 1][b - 1][e].v < best) {
            best = f[i - 1][b - 1][e].v;
            arg = e;
          }
      for (std::size_t e = 0; e < k; ++e) {
        const double stay = f[i - 1][b][e].v;
        Cell c;
        if (stay <= best) {
          c = {stay, false, e};
        } else {
          c = {best, true, arg};
        }
        c.v += cost[i][e];
        f[i][b][e] = c;
      }
    }

  double best = kInf;
  std::size_t bb = 0, be = 0;
  for (std::size_t b = 0; b < M; ++b)
    for (std::size_t e = 0; e < k; ++e)
      if (f[n - 1][b][e].v < best) {
        best = f[n - 1][b][e].v;
        bb = b;
        be = e;
      }
  if (!std::isfinite(best)) {
    p.loss_bits = kInf;
    return p;
  }
  p.loss_bits = best;
  std::vector<std::pair<std::size_t, ExpertIndex>> rev;
  std::size_t b = bb, e = be;
  for (std::size_t i = n; i-- > 0;) {
    const Cell& c = f[i][b][e];
    if (c.fresh) {
      rev.emplace_back(i, e);
      if (i == 0) break;
      e = c.from;
      --b;
    }
  }
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    p.starts.push_back(it->first);
    p.experts.push_back(it->second);
  }
  return p;
}

}  // namespace esp
