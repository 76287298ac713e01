#include "esprior/switch_map.hpp"

#include <Eigen/Dense>

#include "esprior/errors.hpp"
#include "esprior/forward.hpp"

namespace esp {

namespace {

// Eigen tables of log-masses, (time, expert).
using Table = Eigen::MatrixXd;

LogMass at(const Table& t, std::size_t i, std::size_t e) {
  return LogMass(t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)));
}

void put(Table& t, std::size_t i, std::size_t e, LogMass v) {
  t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e)) = v.log();
}

}  // namespace

SwitchMap switch_map(const SwitchConfig& cfg, const ExpertList& experts,
                     std::span<const Symbol> data) {
  const std::size_t k = cfg.pi_k.size();
  if (experts.size() != k)
    throw InputError("switch prior has " + std::to_string(k) + " experts, got " +
                     std::to_string(experts.size()));
  if (cfg.pi_t.support_end() && !cfg.pi_t.truncation_declared())
    throw InputError("switch-time law has finite support; declare the truncation");
  SwitchMap out;
  const std::size_t n = data.size();
  if (n == 0) return out;
  for (std::size_t i = 0; i < n; ++i)
    if (data[i] >= experts.front()->alphabet_size())
      throw InputError("symbol index outside alphabet at position " + std::to_string(i + 1));

  const double ninf = -std::numeric_limits<double>::infinity();
  const auto N = static_cast<Eigen::Index>(n + 2), K = static_cast<Eigen::Index>(k);
  // Row i (1-based time) of each table.
  Table emit = Table::Constant(N, K, ninf);
  for (std::size_t i = 1; i <= n; ++i) {
    const auto row = emission_row(experts, data.first(i - 1), data[i - 1]);
    for (std::size_t e = 0; e < k; ++e) put(emit, i, e, row[e]);
  }
  const LogMass theta = LogMass::from_prob(cfg.theta);
  const LogMass stable = LogMass::from_prob(1.0 - cfg.theta);
  auto escape = [&](std::size_t i) { return LogMass::from_prob(cfg.pi_t.hazard(i)); };
  auto stay = [&](std::size_t i) { return LogMass::from_prob(cfg.pi_t.survive(i)); };

  // Lp(i, e): best joint of x^i with an expert prefix whose run sits in the
  // unstable band on expert e at time i. L(i): best such prefix that then
  // escapes to the block-start state after time i.
  Table Lp = Table::Constant(N, K, ninf);
  std::vector<LogMass> L(n + 1, LogMass::zero());
  std::vector<std::size_t> L_arg(n + 1, 0);
  std::vector<std::vector<char>> from_continue(n + 1, std::vector<char>(k, 0));
  L[0] = LogMass::one();

  for (std::size_t e = 0; e < k; ++e) put(Lp, 1, e, theta * cfg.pi_k[e] * at(emit, 1, e));
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) {
      for (std::size_t e = 0; e < k; ++e) {
        const LogMass reenter = theta * cfg.pi_k[e];
        // Staying on e and re-switching to e give the same experts: sum them.
        const LogMass cont = at(Lp, i - 1, e) * log_sum(stay(i - 1), escape(i - 1) * reenter);
        const LogMass jump = L[i - 1] * reenter;
        const bool c = cont >= jump;
        from_continue[i][e] = c;
        put(Lp, i, e, (c ? cont : jump) * at(emit, i, e));
        ++out.work;
      }
    }
    LogMass best = LogMass::zero();
    std::size_t arg = 0;
    for (std::size_t e = 0; e < k; ++e) {
      const LogMass v = at(Lp, i, e) * escape(i);
      if (v > best) {
        best = v;
        arg = e;
      }
    }
    L[i] = best;
    L_arg[i] = arg;
  }

  // R(i, e): total mass of x_i..x_n all predicted by e, starting from the
  // block-start state after time i-1. Rp(i, e): same but already in the
  // unstable band at time i. T(i, e): P_e(x_i..x_n | x^{i-1}).
  Table R = Table::Constant(N, K, ninf);
  Table Rp = Table::Constant(N, K, ninf);
  Table T = Table::Constant(N, K, ninf);
  for (std::size_t e = 0; e < k; ++e) {
    put(R, n + 1, e, LogMass::one());
    put(Rp, n + 1, e, LogMass::one());
    put(T, n + 1, e, LogMass::one());
  }
  for (std::size_t i = n; i >= 1; --i) {
    for (std::size_t e = 0; e < k; ++e) {
      const LogMass em = at(emit, i, e);
      put(T, i, e, em * at(T, i + 1, e));
      LogMass rp;
      if (i == n) {
        rp = em;  // the run continues past the data either way
      } else {
        // From U(e, i): escape then restart on e (its block mass R), or stay.
        rp = em * log_sum(escape(i) * at(R, i + 1, e), stay(i) * at(Rp, i + 1, e));
      }
      put(Rp, i, e, rp);
      put(R, i, e, log_sum(theta * cfg.pi_k[e] * rp, stable * cfg.pi_k[e] * at(T, i, e)));
      ++out.work;
    }
  }

  // Best start i of the final constant block and its expert.
  LogMass best = LogMass::zero();
  std::size_t bi = 1, be = 0;
  bool found = false;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t e = 0; e < k; ++e) {
      const LogMass v = L[i - 1] * at(R, i, e);
      if (!found || v > best) {
        best = v;
        bi = i;
        be = e;
        found = true;
      }
    }
  if (best.is_zero()) throw ZeroMarginalError(n);
  out.probability = best;
  out.sequence.assign(n, be);

  // Walk the unstable-band pointers back from the prefix ending at bi - 1.
  if (bi > 1) {
    std::size_t e = L_arg[bi - 1];
    for (std::size_t i = bi - 1; i >= 1; --i) {
      out.sequence[i - 1] = e;
      if (i == 1) break;
      if (!from_continue[i][e]) e = L_arg[i - 1];
    }
  }
  return out;
}

}  // namespace esp
