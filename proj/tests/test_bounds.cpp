#include <doctest.h>

#include <cmath>

#include "esprior/bounds.hpp"
#include "esprior/errors.hpp"
#include "esprior/forward.hpp"
#include "esprior/models.hpp"
#include "support.hpp"

using namespace esp;
using esp::testing::dist;

TEST_CASE("bayes bound") {
  CHECK(bayes_bound(Distribution::uniform(4), 3) == doctest::Approx(2.0));
  CHECK(bayes_bound(dist({1.0, 0.0}), 0) == 0.0);
  CHECK(bayes_bound(dist({0.5, 0.25, 0.25}), 2) == doctest::Approx(2.0));
  CHECK(std::isinf(bayes_bound(dist({1.0, 0.0}), 1)));
}

TEST_CASE("fixed share bound") {
  CHECK(fixed_share_bound(10, 1, 4, 0.0, 0.0) == doctest::Approx(2.0));
  // H(1/4) = 0.811278...
  CHECK(fixed_share_bound(8, 2, 2, 0.25, 0.25) == doctest::Approx(8 * 0.8112781244591328 + 2));
  CHECK(std::isinf(fixed_share_bound(8, 2, 2, 0.0, 0.25)));
  CHECK(cross_entropy_bits(0.3, 0.3) == doctest::Approx(-0.3 * std::log2(0.3) - 0.7 * std::log2(0.7)));
  CHECK(switch_rate(10, 4) == doctest::Approx(1.0 / 3.0));
  CHECK(switch_rate(1, 1) == 0.0);
}

TEST_CASE("universal share and unimix bounds") {
  CHECK(universal_share_bound(1) == doctest::Approx(1.0));
  CHECK(universal_share_bound(16) == doctest::Approx(3.0));
  CHECK(unimix_bound(1, 50, 1.1) == doctest::Approx(1.1));
  CHECK(unimix_bound(2, static_cast<std::size_t>(std::round(M_PI * 4)), 0.0) ==
        doctest::Approx(0.5 * std::log2(13.0 / M_PI)));
}

TEST_CASE("switch bound") {
  CHECK(switch_bound(1, 0, 2) == doctest::Approx(2.0));
  CHECK(switch_bound(2, 3, 2) == doctest::Approx(2 + 2 + std::log2(6.0) + 1.0));
  CHECK(switch_bound(2, 3, 2) == doctest::Approx(7.585).epsilon(1e-3));
  for (double m = 1; m <= 5; ++m)
    for (double t = m - 1; t < 20; ++t) {
      CHECK(switch_bound(m, t + 1, 3) >= switch_bound(m, t, 3));
      if (m + 1 <= t + 1) CHECK(switch_bound(m + 1, t, 3) >= switch_bound(m, t, 3));
    }
}

TEST_CASE("run length bound") {
  CHECK(run_length_bound(8, 2, 2) == doctest::Approx(2 * (1 + 2 + 2 * std::log2(std::log2(5.0)) + 3)));
  CHECK(run_length_bound(8, 2, 2) == doctest::Approx(16.86).epsilon(1e-3));
  CHECK(run_length_bound(6, 6, 4) == doctest::Approx(6 * (2 + 3)));
  for (double m = 1; m <= 4; ++m)
    for (double n = m; n < 64; ++n) CHECK(run_length_bound(n + 1, m, 2) >= run_length_bound(n, m, 2));
}

TEST_CASE("overconfident bound") {
  CHECK(overconfident_bound(Distribution::uniform(2), 0, 10, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK(overconfident_bound(Distribution::uniform(4), 1, 4, 0.5, 0.5) == doctest::Approx(2.0 + 4.0));
  CHECK(overconfident_bound(dist({0.5, 0.25, 0.25}), 2, 8, 0.25, 0.25) ==
        doctest::Approx(2.0 + 8 * 0.8112781244591328));
}

TEST_CASE("switch against run length") {
  const auto a = compare_switch_vs_runlength(std::pow(2.0, 20), 4);
  CHECK(a.switch_lower());
  const auto b = compare_switch_vs_runlength(std::pow(2.0, 16), std::pow(16.0, 3));
  CHECK_FALSE(b.switch_lower());
  const double m = switch_runlength_crossover(std::pow(2.0, 16));
  CHECK(m > 4);
  CHECK(m < 4096);
  const auto at = compare_switch_vs_runlength(std::pow(2.0, 16), m);
  CHECK(at.switch_bits == doctest::Approx(at.run_length_bits).epsilon(1e-6));
}

TEST_CASE("best partition") {
  ExpertList xs{constant_expert(dist({0.9, 0.1})), constant_expert(dist({0.1, 0.9}))};
  const std::vector<Symbol> d{0, 0, 0, 1, 1, 1};
  const auto one = best_partition(xs, d, 1);
  CHECK(one.blocks() == 1);
  CHECK(one.loss_bits == doctest::Approx(-3 * std::log2(0.9) - 3 * std::log2(0.1)));
  const auto two = best_partition(xs, d, 2);
  CHECK(two.starts == std::vector<std::size_t>{0, 3});
  CHECK(two.experts == std::vector<ExpertIndex>{0, 1});
  CHECK(two.loss_bits == doctest::Approx(-6 * std::log2(0.9)));
  const auto many = best_partition(xs, d, 5);
  CHECK(many.blocks() == 2);

  // Agrees with exhaustive search over sequences with at most m blocks.
  esp::testing::Rng rng(71);
  for (int t = 0; t < 10; ++t) {
    auto ys = esp::testing::random_constant_experts(rng, 3, 3);
    const auto data = esp::testing::random_data(rng, 6, 3);
    for (std::size_t m = 1; m <= 3; ++m) {
      double best = 1e300;
      esp::testing::for_each_sequence(3, 6, [&](const auto& s) {
        std::size_t blocks = 1;
        for (std::size_t i = 1; i < s.size(); ++i) blocks += s[i] != s[i - 1];
        if (blocks <= m) best = std::min(best, -std::log2(esp::testing::likelihood(ys, data, s)));
      });
      const auto p = best_partition(ys, data, m);
      CHECK(p.loss_bits == doctest::Approx(best).epsilon(1e-12));
      CHECK(p.blocks() <= m);
      CHECK(-std::log2(esp::testing::likelihood(ys, data, p.sequence(6))) == doctest::Approx(p.loss_bits));
    }
  }
}
