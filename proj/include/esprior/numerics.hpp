#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <numbers>
#include <span>

namespace esp {

/// A probability stored as its natural logarithm. Probability zero is -inf.
///
/// Multiplication and division act on the underlying probabilities (they add
/// and subtract logs); `log_sum` adds probabilities.
class LogMass {
 public:
  constexpr LogMass() = default;
  constexpr explicit LogMass(double log_value) : value_(log_value) {}

  static constexpr LogMass zero() {
    return LogMass(-std::numeric_limits<double>::infinity());
  }
  static constexpr LogMass one() { return LogMass(0.0); }
  static LogMass from_prob(double p) { return LogMass(std::log(p)); }

  constexpr double log() const { return value_; }
  double prob() const { return std::exp(value_); }
  constexpr bool is_zero() const {
    return value_ == -std::numeric_limits<double>::infinity();
  }

  constexpr LogMass& operator*=(LogMass o) {
    value_ = (is_zero() || o.is_zero()) ? zero().value_ : value_ + o.value_;
    return *this;
  }
  constexpr LogMass& operator/=(LogMass o) {
    value_ = is_zero() ? value_ : value_ - o.value_;
    return *this;
  }

  friend constexpr LogMass operator*(LogMass a, LogMass b) { return a *= b; }
  friend constexpr LogMass operator/(LogMass a, LogMass b) { return a /= b; }
  friend constexpr auto operator<=>(LogMass, LogMass) = default;

 private:
  double value_ = -std::numeric_limits<double>::infinity();
};

/// log(exp a + exp b) without overflow; -inf is the identity.
LogMass log_sum(LogMass a, LogMass b);

/// Fold of `log_sum` over a range; empty range gives zero mass.
LogMass log_sum(std::span<const LogMass> xs);

/// Code length in bits: -log2 of the probability.
inline double to_bits(LogMass a) { return -a.log() / std::numbers::ln2; }

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

}  // namespace esp
