#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace esp {

/// Distribution of a switch time Z on the positive integers.
///
/// `tail(n)` is P(Z >= n), `hazard(n)` is P(Z = n | Z >= n) and
/// `survive(n)` its complement. Laws with finite support record the last
/// point of the support; past it the hazard is reported as 0.
class TimeLaw {
 public:
  /// P(Z = n) = 1/(n(n+1)).
  static TimeLaw inverse_polynomial();
  /// P(Z = n) = (1-r)^(n-1) r, 0 < r <= 1.
  static TimeLaw geometric(double r);
  /// Uniform on {a, ..., b}; the support is declared finite.
  static TimeLaw uniform(std::size_t a, std::size_t b);
  /// P(Z >= n) = 1/log2(n+1); -log2 P(Z = n) <= log2 n + 2 log2 log2(n+1) + 3.
  static TimeLaw elias();
  /// `law` conditioned on Z <= s.
  static TimeLaw truncated(const TimeLaw& law, std::size_t s);
  /// Entry i is P(Z = i+1). Finite support, not declared truncated.
  static TimeLaw from_pmf(std::vector<double> pmf);

  double pmf(std::size_t n) const { return pmf_(n); }
  double tail(std::size_t n) const { return n <= 1 ? 1.0 : tail_(n); }
  double hazard(std::size_t n) const;
  double survive(std::size_t n) const;

  std::optional<std::size_t> support_end() const { return support_end_; }
  bool truncation_declared() const { return truncated_; }
  TimeLaw declared() const {
    TimeLaw t = *this;
    t.truncated_ = true;
    return t;
  }
  const std::string& name() const { return name_; }

 private:
  TimeLaw() = default;

  std::function<double(std::size_t)> pmf_;
  std::function<double(std::size_t)> tail_;
  // Optional closed forms; otherwise derived from pmf and tail.
  std::function<double(std::size_t)> hazard_;
  std::function<double(std::size_t)> survive_;
  std::optional<std::size_t> support_end_;
  bool truncated_ = false;
  std::string name_;
};

}  // namespace esp
