#include <doctest.h>

#include <cmath>

#include "esprior/core.hpp"
#include "esprior/errors.hpp"
#include "esprior/forward.hpp"
#include "esprior/models.hpp"
#include "support.hpp"

using namespace esp;
using esp::testing::dist;

TEST_CASE("alphabet") {
  Alphabet a({"x", "y", "z"});
  CHECK(a.size() == 3);
  CHECK(a.index("y") == 1);
  CHECK(a.label(2) == "z");
  CHECK_FALSE(a.find("w").has_value());
  CHECK_THROWS_AS(a.index("w"), InputError);
  CHECK_THROWS_AS(Alphabet({"x", "x"}), InputError);
  CHECK_THROWS_AS(Alphabet({}), InputError);
}

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(dist({0.5, 0.6}), InputError);
  CHECK_THROWS_AS(dist({-0.1, 1.1}), InputError);
  CHECK(Distribution::uniform(4).prob(3) == doctest::Approx(0.25));
  CHECK(Distribution::point(3, 1)[0].is_zero());
}

TEST_CASE("sequential log loss") {
  auto u = uniform_expert(2);
  std::vector<Symbol> d{0, 1, 1, 0};
  CHECK(to_bits(sequential_log_loss(*u, d)) == doctest::Approx(4.0));

  auto kt = kt_estimator(2);
  std::vector<Symbol> ones{1, 1};
  CHECK(sequential_log_loss(*kt, ones).prob() == doctest::Approx(0.5 * 0.75));

  auto sure = constant_expert(dist({1.0, 0.0}));
  CHECK(sequential_log_loss(*sure, ones).is_zero());

  std::vector<Symbol> bad{0, 5};
  CHECK_THROWS_AS(sequential_log_loss(*u, bad), InputError);
}

TEST_CASE("builtin experts") {
  BuiltinExpertSpec c{BuiltinExpertSpec::Kind::constant, {{0.8, 0.2}}, ""};
  auto e = make_builtin_expert(c, 2);
  std::vector<Symbol> h{1, 1, 0};
  CHECK(e->predict(h).prob(0) == doctest::Approx(0.8));
  CHECK(e->predict({}).prob(1) == doctest::Approx(0.2));

  auto lap = make_builtin_expert({BuiltinExpertSpec::Kind::laplace, {}, ""}, 2);
  CHECK(lap->predict({}).prob(0) == doctest::Approx(0.5));

  auto kt = make_builtin_expert({BuiltinExpertSpec::Kind::kt, {}, ""}, 2);
  std::vector<Symbol> counts31{0, 0, 1, 0};
  CHECK(kt->predict(counts31).prob(0) == doctest::Approx(3.5 / 5.0));
  CHECK(kt->predict(counts31).prob(1) == doctest::Approx(1.5 / 5.0));

  BuiltinExpertSpec mk{BuiltinExpertSpec::Kind::markov, {{0.5, 0.5}, {0.9, 0.1}, {0.2, 0.8}}, ""};
  auto m = make_builtin_expert(mk, 2);
  std::vector<Symbol> last1{0, 1};
  CHECK(m->predict(last1).prob(1) == doctest::Approx(0.8));
  CHECK(m->predict({}).prob(0) == doctest::Approx(0.5));

  CHECK_THROWS_AS(make_builtin_expert({BuiltinExpertSpec::Kind::constant, {{0.8, 0.3}}, ""}, 2),
                  InputError);
  CHECK_THROWS_AS(make_builtin_expert({BuiltinExpertSpec::Kind::constant, {{1.0}}, ""}, 2),
                  InputError);
  CHECK_THROWS_AS(make_builtin_expert({BuiltinExpertSpec::Kind::markov, {{0.5, 0.5}}, ""}, 2),
                  InputError);
}

TEST_CASE("builtin predictions are normalized on random histories") {
  esp::testing::Rng rng(21);
  for (std::size_t a : {2u, 3u, 5u}) {
    std::vector<ExpertPtr> xs{kt_estimator(a), laplace_estimator(a), uniform_expert(a)};
    std::vector<Distribution> rows;
    for (std::size_t i = 0; i < a; ++i) rows.push_back(esp::testing::random_dist(rng, a));
    xs.push_back(markov_source(esp::testing::random_dist(rng, a), rows));
    for (int t = 0; t < 20; ++t) {
      const auto h = esp::testing::random_data(rng, static_cast<std::size_t>(t * 5 / 2), a);
      for (const auto& x : xs) CHECK(x->predict(h).total().log() == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("realized advice") {
  std::vector<Symbol> data{0, 1};
  auto r = realized_advice_expert({LogMass::from_prob(0.7), LogMass::from_prob(0.4)}, data, 2, "r");
  CHECK_FALSE(r->full_predictions());
  CHECK_THROWS_AS(r->predict({}), UnsupportedError);
  CHECK(sequential_log_loss(*r, data).prob() == doctest::Approx(0.28));
  CHECK_THROWS_AS(r->probability({}, 1), ContractError);
}

TEST_CASE("meta expert over a single expert is that expert") {
  auto a = kt_estimator(3);
  auto meta = model_as_expert(bayes(dist({1.0})), {a});
  std::vector<Symbol> h{2, 0, 2, 2, 1};
  for (std::size_t i = 0; i <= h.size(); ++i) {
    const auto ctx = std::span<const Symbol>(h).first(i);
    const auto want = a->predict(ctx), got = meta->predict(ctx);
    for (std::size_t x = 0; x < 3; ++x) CHECK(got.prob(x) == doctest::Approx(want.prob(x)).epsilon(1e-12));
  }
}

TEST_CASE("meta expert chain rule equals the model marginal") {
  esp::testing::Rng rng(22);
  for (int t = 0; t < 10; ++t) {
    const std::size_t k = 2 + t % 2, n = 5 + static_cast<std::size_t>(t) * 3 / 2;
    auto xs = esp::testing::random_constant_experts(rng, k, 3);
    xs[0] = kt_estimator(3);
    auto model = fixed_share(esp::testing::random_dist(rng, k), 0.2);
    const auto data = esp::testing::random_data(rng, n, 3);
    auto meta = model_as_expert(model, xs);
    const double chain = sequential_log_loss(*meta, data).log();
    const double direct = forward_marginal(model, xs, data).marginal.log();
    CHECK(chain == doctest::Approx(direct).epsilon(1e-9));
    // Out-of-order queries replay from scratch and agree.
    const std::vector<Symbol> other{2, 2};
    const auto p1 = meta->predict(other);
    (void)meta->predict(data);
    const auto p2 = meta->predict(other);
    CHECK(p1.prob(0) == doctest::Approx(p2.prob(0)).epsilon(1e-14));
  }
}

TEST_CASE("nested Bayes mixtures flatten") {
  auto a = constant_expert(dist({0.9, 0.1}), "a");
  auto b = constant_expert(dist({0.3, 0.7}), "b");
  auto c = kt_estimator(2, "c");
  auto inner = model_as_expert(bayes(dist({0.5, 0.5})), {a, b}, "ab");
  auto outer = bayes(dist({0.5, 0.5}));
  auto flat = bayes(dist({0.25, 0.25, 0.5}));
  for (std::size_t n = 0; n <= 4; ++n) {
    esp::testing::for_each_sequence(2, n, [&](const std::vector<std::size_t>& data) {
      const double nested = forward_marginal(outer, {inner, c}, data).marginal.log();
      const double direct = forward_marginal(flat, {a, b, c}, data).marginal.log();
      CHECK(nested == doctest::Approx(direct).epsilon(1e-12));
    });
  }
}
