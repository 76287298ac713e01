#include "esprior/approx.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "esprior/errors.hpp"
#include "esprior/forward.hpp"

namespace esp {

std::vector<WeightEntry> trim_frontier(std::span<const WeightEntry> weights, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InputError("trim fraction must lie in (0, 1]");
  std::vector<WeightEntry> all(weights.begin(), weights.end());
  if (p == 1.0 || all.size() <= 1) return all;

  std::vector<LogMass> ms;
  for (const auto& w : all) ms.push_back(w.second);
  const LogMass total = log_sum(ms);
  if (total.is_zero()) throw ContractError("cannot trim a frontier without mass");

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (all[a].second != all[b].second) return all[a].second > all[b].second;
    return all[a].first < all[b].first;
  });
  const double target = p * (1.0 - 1e-12);
  std::vector<char> keep(all.size(), 0);
  double share = 0.0;
  for (std::size_t i : order) {
    keep[i] = 1;
    share += (all[i].second / total).prob();
    if (share >= target) break;
  }
  std::vector<LogMass> kept_ms;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (keep[i]) kept_ms.push_back(all[i].second);
  const LogMass scale = total / log_sum(kept_ms);
  std::vector<WeightEntry> out;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (keep[i]) out.emplace_back(all[i].first, all[i].second * scale);
  return out;
}

std::vector<ExpertIndex> ml_estimate(const ExpertList& experts, std::span<const Symbol> data) {
  if (experts.empty()) throw InputError("no experts");
  std::vector<ExpertIndex> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = emission_row(experts, data.first(i), data[i]);
    out.push_back(static_cast<ExpertIndex>(std::max_element(row.begin(), row.end()) - row.begin()));
  }
  return out;
}

namespace {

class LaplaceSuccessor final : public SequentialPrior {
 public:
  explicit LaplaceSuccessor(std::size_t k) : counts_(k, 0) {
    if (k == 0) throw InputError("need at least one expert");
  }
  std::size_t expert_count() const override { return counts_.size(); }
  void reset() override {
    std::fill(counts_.begin(), counts_.end(), 0);
    n_ = 0;
  }
  Distribution next() const override {
    const double denom = static_cast<double>(n_ + counts_.size());
    Eigen::VectorXd log(static_cast<Eigen::Index>(counts_.size()));
    for (std::size_t e = 0; e < counts_.size(); ++e)
      log(static_cast<Eigen::Index>(e)) = std::log((static_cast<double>(counts_[e]) + 1.0) / denom);
    return Distribution(std::move(log));
  }
  void observe(ExpertIndex e) override {
    ++counts_.at(e);
    ++n_;
  }

 private:
  std::vector<std::size_t> counts_;
  std::size_t n_ = 0;
};

class HmmConditional final : public SequentialPrior {
 public:
  explicit HmmConditional(ModelPtr model) : model_(std::move(model)) { reset(); }
  std::size_t expert_count() const override { return model_->expert_count(); }
  void reset() override {
    pass_ = std::make_unique<ForwardPass>(*model_);
    pass_->propagate();
  }
  Distribution next() const override { return pass_->next_expert(); }
  void observe(ExpertIndex e) override {
    std::vector<LogMass> row(model_->expert_count(), LogMass::zero());
    row.at(e) = LogMass::one();
    pass_->update(row);
    if (pass_->weights().empty())
      throw ZeroMarginalError(pass_->level());
    pass_->propagate();
  }

 private:
  ModelPtr model_;
  std::unique_ptr<ForwardPass> pass_;
};

}  // namespace

std::unique_ptr<SequentialPrior> laplace_successor(std::size_t k) {
  return std::make_unique<LaplaceSuccessor>(k);
}

std::unique_ptr<SequentialPrior> hmm_conditional(ModelPtr model) {
  return std::make_unique<HmmConditional>(std::move(model));
}

MlConditioned ml_conditioned_marginal(SequentialPrior& prior, const ExpertList& experts,
                                      std::span<const Symbol> data) {
  if (experts.size() != prior.expert_count())
    throw InputError("prior and expert list disagree on the number of experts");
  prior.reset();
  MlConditioned r;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = emission_row(experts, data.first(i), data[i]);
    const Distribution pi = prior.next();
    std::vector<LogMass> terms;
    for (std::size_t e = 0; e < row.size(); ++e) terms.push_back(pi[e] * row[e]);
    const LogMass step = log_sum(terms);
    if (step.is_zero()) throw ZeroMarginalError(i + 1);
    const auto ml = static_cast<ExpertIndex>(std::max_element(row.begin(), row.end()) - row.begin());
    r.prior.push_back(pi);
    r.step_probability.push_back(step);
    r.estimate.push_back(ml);
    r.marginal *= step;
    prior.observe(ml);
  }
  return r;
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw InputError("distributions have different supports");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].is_zero()) continue;
    if (q[i].is_zero()) return std::numeric_limits<double>::infinity();
    d += p.prob(i) * (p[i].log() - q[i].log());
  }
  return d;
}

}  // namespace esp
