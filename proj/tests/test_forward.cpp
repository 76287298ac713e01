#include <doctest.h>

#include <cmath>

#include "esprior/errors.hpp"
#include "esprior/forward.hpp"
#include "esprior/models.hpp"
#include "support.hpp"

using namespace esp;
using esp::testing::dist;

namespace {

ExpertList ab_experts() {
  return {constant_expert(dist({0.8, 0.2}), "a"), constant_expert(dist({0.5, 0.5}), "b")};
}

std::vector<ModelPtr> zoo(std::size_t k, esp::testing::Rng& rng) {
  auto w = esp::testing::random_dist(rng, k);
  return {bayes(w),
          fixed_elementwise(w),
          universal_elementwise(k),
          fixed_share(w, 0.3),
          universal_share(w),
          overconfident(esp::testing::random_dist(rng, k - 1), 0.25),
          switch_model({0.5, TimeLaw::inverse_polynomial(), w}),
          run_length(TimeLaw::inverse_polynomial(), w)};
}

}  // namespace

TEST_CASE("Bayes marginal on two zeros is 0.445") {
  const std::vector<Symbol> data{0, 0};
  const auto r = forward_marginal(bayes(dist({0.5, 0.5})), ab_experts(), data);
  CHECK(r.marginal.prob() == doctest::Approx(0.445).epsilon(1e-14));
  REQUIRE(r.step_probability.size() == 2);
  CHECK(r.step_probability[0].prob() == doctest::Approx(0.65));
  // After one zero the posterior is (0.8, 0.5)/1.3.
  CHECK(r.next_expert[1].prob(0) == doctest::Approx(0.8 / 1.3));
  CHECK(r.next_outcome[1].prob(0) == doctest::Approx((0.64 + 0.25) / 1.3));
}

TEST_CASE("empty data gives probability one and the prior on the first expert") {
  esp::testing::Rng rng(41);
  const auto w = esp::testing::random_dist(rng, 3);
  auto xs = esp::testing::random_constant_experts(rng, 3, 2);
  for (const auto& m : {bayes(w), fixed_share(w, 0.4), universal_share(w), run_length(TimeLaw::elias(), w)}) {
    const auto r = forward_marginal(m, xs, std::vector<Symbol>{});
    CHECK(r.marginal.log() == 0.0);
    REQUIRE(r.next_expert.size() == 1);
    for (std::size_t e = 0; e < 3; ++e) CHECK(r.next_expert[0].prob(e) == doctest::Approx(w.prob(e)));
  }
}

TEST_CASE("forward marginal equals the brute-force sum for the zoo") {
  esp::testing::Rng rng(42);
  for (int t = 0; t < 4; ++t)
    for (std::size_t k : {2u, 3u})
      for (const auto& m : zoo(k, rng)) {
        const std::size_t n = 1 + static_cast<std::size_t>(t) + (k == 2 ? 2 : 0);
        auto xs = esp::testing::random_constant_experts(rng, m->expert_count(), 3);
        const auto data = esp::testing::random_data(rng, n, 3);
        const double want = esp::testing::brute_marginal(*m, xs, data);
        const double got = forward_marginal(m, xs, data).marginal.log();
        INFO(m->name() << " k=" << k << " n=" << n);
        CHECK(std::abs(got - std::log(want)) <= 1e-9 * std::max(1.0, std::abs(std::log(want))));
      }
}

TEST_CASE("outcome predictions are mixtures and chain to the marginal") {
  esp::testing::Rng rng(43);
  auto w = esp::testing::random_dist(rng, 3);
  auto xs = esp::testing::random_constant_experts(rng, 3, 4);
  xs[1] = kt_estimator(4);
  const auto data = esp::testing::random_data(rng, 12, 4);
  const auto r = forward_marginal(fixed_share(w, 0.1), xs, data);
  LogMass chain = LogMass::one();
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(r.next_outcome[i].total().log() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.next_outcome[i][data[i]].log() == doctest::Approx(r.step_probability[i].log()).epsilon(1e-12));
    chain *= r.next_outcome[i][data[i]];
  }
  CHECK(chain.log() == doctest::Approx(r.marginal.log()).epsilon(1e-12));
}

TEST_CASE("frontier mass before each update is the running marginal") {
  esp::testing::Rng rng(44);
  for (const auto& m : zoo(3, rng)) {
    auto xs = esp::testing::random_constant_experts(rng, m->expert_count(), 2);
    const auto data = esp::testing::random_data(rng, 8, 2);
    const auto r = forward_marginal(m, xs, data);
    LogMass running = LogMass::one();
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(std::abs(r.pre_update_mass[i].log() - running.log()) <= 1e-9);
      running *= r.step_probability[i];
    }
  }
}

TEST_CASE("online evaluation is consistent with a fresh run") {
  esp::testing::Rng rng(45);
  auto w = esp::testing::random_dist(rng, 2);
  auto xs = esp::testing::random_constant_experts(rng, 2, 3);
  const auto data = esp::testing::random_data(rng, 15, 3);
  SequentialPredictor p(universal_share(w), xs);
  for (std::size_t i = 0; i < data.size(); ++i) {
    p.observe(data[i]);
    const auto fresh = forward_marginal(universal_share(w), xs, std::span(data).first(i + 1));
    CHECK(std::abs(p.marginal().log() - fresh.marginal.log()) <= 1e-12);
    CHECK(p.next_expert().prob(1) == doctest::Approx(fresh.next_expert.back().prob(1)).epsilon(1e-12));
  }
}

TEST_CASE("zero marginal aborts with the step index") {
  ExpertList xs{constant_expert(dist({1.0, 0.0})), constant_expert(dist({0.9, 0.1}))};
  const std::vector<Symbol> data{0, 0, 1, 0};
  try {
    forward_marginal(bayes(dist({1.0, 0.0})), xs, data);
    FAIL("expected an abort");
  } catch (const ZeroMarginalError& e) {
    CHECK(e.step() == 3);
  }
  // Dead states are dropped but the other expert keeps the run alive.
  const auto r = forward_marginal(bayes(dist({0.5, 0.5})), xs, data);
  CHECK(r.marginal.prob() == doctest::Approx(0.5 * 0.9 * 0.9 * 0.1 * 0.9));
  CHECK(r.next_expert.back().prob(1) == doctest::Approx(1.0));
}

TEST_CASE("transition counter equals the sum of successor counts") {
  // Fixed share, k experts: k stay arcs, k arcs into the hub, k out of it.
  const std::size_t k = 3;
  auto xs = ExpertList{uniform_expert(2), uniform_expert(2), uniform_expert(2)};
  const std::vector<Symbol> data(20, 0);
  const auto r = forward_marginal(fixed_share(Distribution::uniform(k), 0.2), xs, data);
  CHECK(r.transitions_per_level[1] == 1 + k);  // initial arc, then the hub
  for (std::size_t n = 2; n < r.transitions_per_level.size(); ++n)
    CHECK(r.transitions_per_level[n] == 3 * k);
  CHECK(r.peak_weights == k + 1);
}

TEST_CASE("trimming with p = 1 is exact") {
  esp::testing::Rng rng(46);
  auto w = esp::testing::random_dist(rng, 3);
  auto xs = esp::testing::random_constant_experts(rng, 3, 3);
  const auto data = esp::testing::random_data(rng, 10, 3);
  ForwardOptions o;
  o.trim = 1.0;
  CHECK(forward_marginal(universal_share(w), xs, data, o).marginal.log() ==
        forward_marginal(universal_share(w), xs, data).marginal.log());
  o.trim = 0.0;
  CHECK_THROWS_AS(forward_marginal(universal_share(w), xs, data, o), InputError);
}

TEST_CASE("posterior examples") {
  const std::vector<Symbol> one{0};
  const auto g = posterior_experts(*bayes(dist({0.5, 0.5})), ab_experts(), one);
  REQUIRE(g.steps() == 1);
  CHECK(g.prob(0, 0) == doctest::Approx(0.8 / 1.3).epsilon(1e-14));
  CHECK(g.prob(0, 1) == doctest::Approx(0.5 / 1.3).epsilon(1e-14));
  CHECK(posterior_experts(*bayes(dist({0.5, 0.5})), ab_experts(), std::vector<Symbol>{}).steps() == 0);

  ExpertList sure{constant_expert(dist({1.0, 0.0})), constant_expert(dist({1.0, 0.0}))};
  CHECK_THROWS_AS(posterior_experts(*bayes(dist({0.5, 0.5})), sure, std::vector<Symbol>{1}),
                  ZeroMarginalError);
}

TEST_CASE("posterior equals brute force for the zoo") {
  esp::testing::Rng rng(47);
  for (std::size_t k : {2u, 3u})
    for (const auto& m : zoo(k, rng)) {
      const std::size_t n = k == 2 ? 5 : 3;
      auto xs = esp::testing::random_constant_experts(rng, m->expert_count(), 3);
      const auto data = esp::testing::random_data(rng, n, 3);
      const auto want = esp::testing::brute_posterior(*m, xs, data);
      const auto got = posterior_experts(*m, xs, data);
      INFO(m->name());
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t e = 0; e < m->expert_count(); ++e) {
          CHECK(std::abs(got.prob(i, e) - want[i][e]) <= 1e-9);
          row += got.prob(i, e);
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
}

TEST_CASE("viterbi on Bayes picks the constant sequence") {
  ExpertList xs{constant_expert(dist({0.9, 0.1})), constant_expert(dist({0.4, 0.6}))};
  const std::vector<Symbol> data{0, 0, 1, 0, 0};
  const auto w = dist({0.3, 0.7});
  const auto p = viterbi_unambiguous(*bayes(w), xs, data);
  CHECK(p.experts == std::vector<ExpertIndex>(5, 0));
  CHECK(p.joint.prob() == doctest::Approx(0.3 * 0.9 * 0.9 * 0.1 * 0.9 * 0.9));
}

TEST_CASE("viterbi matches exhaustive search on fixed share") {
  esp::testing::Rng rng(48);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t) % 6;
    auto xs = esp::testing::random_constant_experts(rng, 2, 3);
    auto m = fixed_share(esp::testing::random_dist(rng, 2), 0.05 + 0.04 * t);
    const auto data = esp::testing::random_data(rng, n, 3);
    const auto want = esp::testing::brute_map(*m, xs, data);
    const auto got = viterbi_unambiguous(*m, xs, data);
    CHECK(got.experts == want.seq);
    CHECK(std::abs(got.joint.log() - std::log(want.joint)) <= 1e-9);
  }
}

TEST_CASE("viterbi ties go to the lowest expert and ambiguity is refused") {
  ExpertList same{uniform_expert(2), uniform_expert(2), uniform_expert(2)};
  const std::vector<Symbol> data{0, 1, 1};
  const auto p = viterbi_unambiguous(*fixed_elementwise(Distribution::uniform(3)), same, data);
  CHECK(p.experts == std::vector<ExpertIndex>{0, 0, 0});
  CHECK_THROWS_AS(viterbi_unambiguous(*universal_share(Distribution::uniform(3)), same, data),
                  ContractError);
  CHECK(viterbi_unambiguous(*bayes(Distribution::uniform(3)), same, std::vector<Symbol>{}).joint.log() == 0.0);
}

TEST_CASE("viterbi on the universal elementwise mixture") {
  esp::testing::Rng rng(49);
  for (int t = 0; t < 5; ++t) {
    auto xs = esp::testing::random_constant_experts(rng, 2, 2);
    auto m = universal_elementwise(2);
    const auto data = esp::testing::random_data(rng, 6, 2);
    const auto want = esp::testing::brute_map(*m, xs, data);
    const auto got = viterbi_unambiguous(*m, xs, data);
    CHECK(got.experts == want.seq);
    CHECK(std::abs(got.joint.log() - std::log(want.joint)) <= 1e-9);
  }
}
