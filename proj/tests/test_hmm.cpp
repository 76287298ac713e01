#include <doctest.h>

#include <cmath>

#include "esprior/errors.hpp"
#include "esprior/forward.hpp"
#include "esprior/hmm.hpp"
#include "esprior/models.hpp"
#include "support.hpp"

using namespace esp;
using esp::testing::dist;

namespace {

// Two productive states per level, one silent hub. `leak` scales the hub's
// outgoing mass, `loop` makes the hub point at itself.
class Planted final : public HmmModel {
 public:
  Planted(double leak, bool loop, bool bad_level = false)
      : leak_(leak), loop_(loop), bad_level_(bad_level) {}
  std::size_t expert_count() const override { return 2; }
  std::vector<Arc> initial() const override { return {{hub(0), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    if (q.kind == 1) {
      std::vector<Arc> a{{prod(q.level + 1, 0), LogMass::from_prob(0.5 * leak_)},
                         {prod(q.level + 1, 1), LogMass::from_prob(0.5 * leak_)}};
      if (loop_) a = {{prod(q.level + 1, 0), LogMass::from_prob(0.5)}, {q, LogMass::from_prob(0.5)}};
      return a;
    }
    return {{hub(bad_level_ ? q.level + 1 : q.level), LogMass::one()}};
  }
  bool is_productive(const StateId& q) const override { return q.kind == 0; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 1; }
  std::string name() const override { return "planted"; }

 private:
  static StateId hub(std::size_t n) {
    StateId s;
    s.level = static_cast<std::uint32_t>(n);
    s.kind = 1;
    return s;
  }
  static StateId prod(std::size_t n, int e) {
    StateId s;
    s.level = static_cast<std::uint32_t>(n);
    s.f[0] = e;
    return s;
  }
  double leak_;
  bool loop_, bad_level_;
};

std::vector<ModelPtr> zoo(std::size_t k, esp::testing::Rng& rng) {
  auto w = esp::testing::random_dist(rng, k);
  SwitchConfig cfg{0.5, TimeLaw::inverse_polynomial(), w};
  return {bayes(w),
          fixed_elementwise(w),
          universal_elementwise(k),
          fixed_share(w, 0.3),
          universal_share(w),
          overconfident(w, 0.25),
          switch_model(cfg),
          run_length(TimeLaw::inverse_polynomial(), w),
          run_length(TimeLaw::uniform(1, 3), w)};
}

}  // namespace

TEST_CASE("validate accepts the zoo") {
  esp::testing::Rng rng(31);
  for (std::size_t k : {1u, 2u, 3u})
    for (const auto& m : zoo(k, rng)) {
      const auto rep = validate(*m, 6);
      INFO(m->name());
      CHECK(rep.ok());
    }
}

TEST_CASE("validate reports planted defects") {
  Planted leaky(0.9, false);
  auto rep = validate(leaky, 3);
  CHECK(rep.has(Violation::Kind::normalization));
  CHECK(rep.violations.front().state.find("L0") != std::string::npos);

  Planted loopy(1.0, true);
  CHECK(validate(loopy, 3).has(Violation::Kind::silent_depth));

  Planted skewed(1.0, false, true);
  CHECK(validate(skewed, 3).has(Violation::Kind::level));

  Planted fine(1.0, false);
  CHECK(validate(fine, 4).ok());
}

TEST_CASE("forward pass rejects silent cycles and level violations") {
  Planted loopy(1.0, true);
  ForwardPass p(loopy);
  CHECK_THROWS_AS(p.propagate(), ContractError);

  Planted skewed(1.0, false, true);
  ForwardPass q(skewed);
  q.propagate();
  std::vector<LogMass> one(2, LogMass::one());
  q.update(one);
  CHECK_THROWS_AS(q.propagate(), ContractError);
}

TEST_CASE("expert_sequence_prior examples") {
  auto b = bayes(Distribution::uniform(4));
  std::vector<ExpertIndex> aaa{0, 0, 0}, ab{0, 1};
  CHECK(expert_sequence_prior(*b, aaa).prob() == doctest::Approx(0.25));
  CHECK(expert_sequence_prior(*b, ab).is_zero());

  auto fs = fixed_share(Distribution::uniform(2), 0.5);
  CHECK(expert_sequence_prior(*fs, ab).prob() == doctest::Approx(0.5 * 0.25));
  CHECK(expert_sequence_prior(*fs, std::vector<ExpertIndex>{}).log() == 0.0);
  CHECK_THROWS_AS(expert_sequence_prior(*fs, std::vector<ExpertIndex>{2}), InputError);
}

TEST_CASE("expert sequence priors sum to one and match run enumeration") {
  esp::testing::Rng rng(32);
  for (std::size_t k : {2u, 3u})
    for (const auto& m : zoo(k, rng)) {
      const std::size_t kk = m->expert_count();
      for (std::size_t n = 1; n <= (kk > 3 ? 4u : 6u); ++n) {
        double total = 0.0;
        esp::testing::for_each_sequence(kk, n, [&](const auto& s) {
          const double p = expert_sequence_prior(*m, s).prob();
          total += p;
          if (n <= 3) CHECK(p == doctest::Approx(esp::testing::run_prior(*m, s)).epsilon(1e-12));
        });
        INFO(m->name() << " k=" << k << " n=" << n);
        CHECK(std::abs(total - 1.0) <= 1e-9);
      }
    }
}

TEST_CASE("census counts states per level") {
  auto fs = fixed_share(Distribution::uniform(3), 0.2);
  const auto c = census(*fs, 4);
  REQUIRE(c.size() == 5);
  CHECK(c[0].states == 1);  // hub
  CHECK(c[2].states == 4);  // three experts plus a hub
  CHECK(c[2].productive == 3);
  CHECK(c[2].arcs == 3 * 2 + 3);
}

TEST_CASE("eliminating the fixed-share hub") {
  auto fs = fixed_share(Distribution::uniform(4), 0.3);
  StateId hub;
  hub.level = 2;
  hub.kind = 1;
  auto el = eliminate_silent(fs, hub);
  const auto before = census(*fs, 3), after = census(*el, 3);
  // The 2k arcs through the hub become k^2 direct arcs, which absorb the
  // k stay arcs.
  CHECK(before[2].arcs == 8 + 4);
  CHECK(after[2].arcs == 16);
  CHECK(after[2].states + 1 == before[2].states);

  esp::testing::Rng rng(33);
  for (std::size_t n = 1; n <= 4; ++n)
    esp::testing::for_each_sequence(4, n, [&](const auto& s) {
      CHECK(expert_sequence_prior(*el, s).prob() ==
            doctest::Approx(expert_sequence_prior(*fs, s).prob()).epsilon(1e-12));
    });
  for (int t = 0; t < 10; ++t) {
    auto xs = esp::testing::random_constant_experts(rng, 4, 3);
    const auto data = esp::testing::random_data(rng, 1 + t % 4, 3);
    CHECK(forward_marginal(el, xs, data).marginal.log() ==
          doctest::Approx(forward_marginal(fs, xs, data).marginal.log()).epsilon(1e-9));
  }
  CHECK_THROWS_AS(eliminate_silent(fs, StateId{}), ContractError);  // productive
  StateId start;
  start.kind = 1;
  CHECK_THROWS_AS(eliminate_silent(fs, start), ContractError);  // initial
}

TEST_CASE("eliminating a chain link keeps the prior") {
  // fixed elementwise with k = 1: hub has one predecessor and one successor.
  auto fe = fixed_elementwise(dist({1.0}));
  StateId hub;
  hub.level = 1;
  hub.kind = 1;
  auto el = eliminate_silent(fe, hub);
  const auto before = census(*fe, 3), after = census(*el, 3);
  std::size_t sb = 0, sa = 0;
  for (auto& c : before) sb += c.states;
  for (auto& c : after) sa += c.states;
  CHECK(sa + 1 == sb);
  for (std::size_t n = 1; n <= 4; ++n)
    CHECK(expert_sequence_prior(*el, std::vector<ExpertIndex>(n, 0)).prob() == doctest::Approx(1.0));
}
