#include "esprior/numerics.hpp"

#include <algorithm>

namespace esp {

LogMass log_sum(LogMass a, LogMass b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const double hi = std::max(a.log(), b.log());
  const double lo = std::min(a.log(), b.log());
  return LogMass(hi + std::log1p(std::exp(lo - hi)));
}

LogMass log_sum(std::span<const LogMass> xs) {
  // Two passes: shift by the maximum so the linear-scale sum cannot overflow.
  double hi = -std::numeric_limits<double>::infinity();
  for (LogMass x : xs) hi = std::max(hi, x.log());
  if (hi == -std::numeric_limits<double>::infinity()) return LogMass::zero();
  double acc = 0.0;
  for (LogMass x : xs) acc += std::exp(x.log() - hi);
  return LogMass(hi + std::log(acc));
}

}  // namespace esp
