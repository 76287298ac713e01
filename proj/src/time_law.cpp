#include "esprior/time_law.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "esprior/errors.hpp"

namespace esp {

double TimeLaw::hazard(std::size_t n) const {
  if (n == 0) throw ContractError("switch times start at 1");
  if (support_end_ && n > *support_end_) return 0.0;
  if (hazard_) return hazard_(n);
  const double t = tail(n);
  if (t <= 0.0) return 0.0;
  return pmf(n) / t;
}

double TimeLaw::survive(std::size_t n) const {
  if (n == 0) throw ContractError("switch times start at 1");
  if (support_end_ && n > *support_end_) return 1.0;
  if (survive_) return survive_(n);
  const double t = tail(n);
  if (t <= 0.0) return 1.0;
  return tail(n + 1) / t;
}

TimeLaw TimeLaw::inverse_polynomial() {
  TimeLaw t;
  t.pmf_ = [](std::size_t n) {
    const double d = static_cast<double>(n);
    return n == 0 ? 0.0 : 1.0 / (d * (d + 1.0));
  };
  t.tail_ = [](std::size_t n) { return 1.0 / static_cast<double>(n); };
  t.hazard_ = [](std::size_t n) { return 1.0 / (static_cast<double>(n) + 1.0); };
  t.survive_ = [](std::size_t n) {
    const double d = static_cast<double>(n);
    return d / (d + 1.0);
  };
  t.name_ = "inv-poly";
  return t;
}

TimeLaw TimeLaw::geometric(double r) {
  if (!(r > 0.0 && r <= 1.0)) throw InputError("geometric rate must lie in (0, 1]");
  TimeLaw t;
  t.pmf_ = [r](std::size_t n) {
    return n == 0 ? 0.0 : std::pow(1.0 - r, static_cast<double>(n - 1)) * r;
  };
  t.tail_ = [r](std::size_t n) { return std::pow(1.0 - r, static_cast<double>(n - 1)); };
  t.hazard_ = [r](std::size_t) { return r; };
  t.survive_ = [r](std::size_t) { return 1.0 - r; };
  t.name_ = "geometric";
  return t;
}

TimeLaw TimeLaw::uniform(std::size_t a, std::size_t b) {
  if (a == 0 || b < a) throw InputError("uniform switch-time law needs 1 <= a <= b");
  TimeLaw t;
  const double width = static_cast<double>(b - a + 1);
  t.pmf_ = [a, b, width](std::size_t n) { return (n >= a && n <= b) ? 1.0 / width : 0.0; };
  t.tail_ = [a, b, width](std::size_t n) {
    if (n <= a) return 1.0;
    if (n > b) return 0.0;
    return static_cast<double>(b - n + 1) / width;
  };
  t.survive_ = [a, b](std::size_t n) {
    if (n < a) return 1.0;
    return static_cast<double>(b - n) / static_cast<double>(b - n + 1);
  };
  t.hazard_ = [a, b](std::size_t n) {
    if (n < a) return 0.0;
    return 1.0 / static_cast<double>(b - n + 1);
  };
  t.support_end_ = b;
  t.truncated_ = true;
  t.name_ = "uniform";
  return t;
}

TimeLaw TimeLaw::elias() {
  TimeLaw t;
  auto tail = [](std::size_t n) { return 1.0 / std::log2(static_cast<double>(n) + 1.0); };
  t.tail_ = tail;
  t.pmf_ = [tail](std::size_t n) { return n == 0 ? 0.0 : tail(n) - tail(n + 1); };
  t.survive_ = [](std::size_t n) {
    const double d = static_cast<double>(n);
    return std::log2(d + 1.0) / std::log2(d + 2.0);
  };
  t.hazard_ = [](std::size_t n) {
    // 1 - log(n+1)/log(n+2), without cancellation.
    const double d = static_cast<double>(n);
    return std::log1p(1.0 / (d + 1.0)) / std::log(d + 2.0);
  };
  t.name_ = "elias";
  return t;
}

TimeLaw TimeLaw::truncated(const TimeLaw& law, std::size_t s) {
  if (s == 0) throw InputError("truncation point must be at least 1");
  auto base = std::make_shared<TimeLaw>(law);
  const double mass = 1.0 - base->tail(s + 1);
  if (!(mass > 0.0)) throw InputError("truncation keeps no mass");
  TimeLaw t;
  t.pmf_ = [base, s, mass](std::size_t n) { return n > s ? 0.0 : base->pmf(n) / mass; };
  t.tail_ = [base, s, mass](std::size_t n) {
    if (n > s) return 0.0;
    return (base->tail(n) - base->tail(s + 1)) / mass;
  };
  t.support_end_ = s;
  t.truncated_ = true;
  t.name_ = law.name_ + "|<=" + std::to_string(s);
  return t;
}

TimeLaw TimeLaw::from_pmf(std::vector<double> pmf) {
  if (pmf.empty()) throw InputError("empty switch-time law");
  double sum = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw InputError("switch-time masses must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("switch-time masses must sum to 1");
  auto table = std::make_shared<std::vector<double>>(std::move(pmf));
  // suffix[i] = P(Z >= i+1)
  auto suffix = std::make_shared<std::vector<double>>(table->size() + 1, 0.0);
  for (std::size_t i = table->size(); i-- > 0;) (*suffix)[i] = (*suffix)[i + 1] + (*table)[i];
  TimeLaw t;
  t.pmf_ = [table](std::size_t n) {
    return (n >= 1 && n <= table->size()) ? (*table)[n - 1] : 0.0;
  };
  t.tail_ = [suffix](std::size_t n) {
    return n - 1 < suffix->size() ? (*suffix)[n - 1] : 0.0;
  };
  t.support_end_ = table->size();
  t.name_ = "table";
  return t;
}

}  // namespace esp
