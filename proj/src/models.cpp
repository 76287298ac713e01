#include "esprior/models.hpp"

#include <cmath>
#include <numeric>

#include "esprior/errors.hpp"

namespace esp {

namespace {

StateId sid(std::size_t level, std::uint16_t kind, std::initializer_list<std::int32_t> f = {}) {
  StateId q;
  q.level = static_cast<std::uint32_t>(level);
  q.kind = kind;
  std::size_t i = 0;
  for (auto v : f) q.f[i++] = v;
  return q;
}

void push(std::vector<Arc>& arcs, const StateId& to, double p) {
  if (p > 0.0) arcs.push_back({to, LogMass::from_prob(p)});
}

void push(std::vector<Arc>& arcs, const StateId& to, LogMass m) {
  if (!m.is_zero()) arcs.push_back({to, m});
}

void check_normalized(const Distribution& d, const char* what) {
  if (d.size() == 0) throw InputError(std::string(what) + " is empty");
  if (std::abs(d.total().prob() - 1.0) > 1e-9)
    throw InputError(std::string(what) + " is not normalized");
}

void check_rate(double a, const char* what) {
  if (!(a >= 0.0 && a <= 1.0)) throw InputError(std::string(what) + " must lie in [0, 1]");
}

void check_law(const TimeLaw& law) {
  if (law.support_end() && !law.truncation_declared())
    throw InputError("switch-time law '" + law.name() +
                     "' has finite support; declare the truncation to use it");
}

int32_t as_i32(std::size_t v) { return static_cast<std::int32_t>(v); }

// Productive states are kind 0 with f[0] = expert unless noted.
constexpr std::uint16_t kProd = 0;
constexpr std::uint16_t kHub = 1;

class Bayes final : public HmmModel {
 public:
  explicit Bayes(Distribution w) : w_(std::move(w)) { check_normalized(w_, "prior"); }
  std::size_t expert_count() const override { return w_.size(); }
  std::vector<Arc> initial() const override {
    std::vector<Arc> a;
    for (std::size_t e = 0; e < w_.size(); ++e) push(a, sid(1, kProd, {as_i32(e)}), w_[e]);
    return a;
  }
  std::vector<Arc> successors(const StateId& q) const override {
    StateId next = q;
    ++next.level;
    return {{next, LogMass::one()}};
  }
  bool is_productive(const StateId&) const override { return true; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 0; }
  bool unambiguous() const override { return true; }
  std::string name() const override { return "bayes"; }

 private:
  Distribution w_;
};

class FixedElementwise final : public HmmModel {
 public:
  explicit FixedElementwise(Distribution a) : alpha_(std::move(a)) {
    check_normalized(alpha_, "mixture weights");
  }
  std::size_t expert_count() const override { return alpha_.size(); }
  std::vector<Arc> initial() const override { return {{sid(0, kHub), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    if (q.kind == kHub) {
      for (std::size_t e = 0; e < alpha_.size(); ++e)
        push(a, sid(q.level + 1, kProd, {as_i32(e)}), alpha_[e]);
    } else {
      a.push_back({sid(q.level, kHub), LogMass::one()});
    }
    return a;
  }
  bool is_productive(const StateId& q) const override { return q.kind == kProd; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 1; }
  bool unambiguous() const override { return true; }
  std::string name() const override { return "fixed-elementwise"; }

 private:
  Distribution alpha_;
};

// Hubs hold the expert counts so far in f[0..k-1]; productive states hold
// the same counts plus the emitted expert in f[6].
class UniversalElementwise final : public HmmModel {
 public:
  UniversalElementwise(std::size_t k, double budget) : k_(k), budget_(budget) {
    if (k_ == 0) throw InputError("need at least one expert");
    if (k_ > 6) throw InputError("universal elementwise mixture supports at most 6 experts");
  }
  std::size_t expert_count() const override { return k_; }
  std::vector<Arc> initial() const override { return {{sid(0, kHub), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    if (q.kind == kHub) {
      check_budget(q.level);
      const double denom = 0.5 * static_cast<double>(k_) + static_cast<double>(q.level);
      for (std::size_t e = 0; e < k_; ++e) {
        StateId p = q;
        p.kind = kProd;
        p.level = q.level + 1;
        p.f[6] = as_i32(e);
        push(a, p, (0.5 + q.f[e]) / denom);
      }
    } else {
      StateId h = q;
      h.kind = kHub;
      h.f[6] = 0;
      ++h.f[static_cast<std::size_t>(q.f[6])];
      a.push_back({h, LogMass::one()});
    }
    return a;
  }
  bool is_productive(const StateId& q) const override { return q.kind == kProd; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[6]); }
  std::size_t silent_depth_bound() const override { return 1; }
  bool unambiguous() const override { return true; }
  std::string name() const override { return "universal-elementwise"; }

 private:
  void check_budget(std::size_t level) const {
    // Productive states at level+1: C(level + k - 1, k - 1) hubs times k.
    double states = static_cast<double>(k_);
    for (std::size_t i = 1; i < k_; ++i)
      states *= static_cast<double>(level + i) / static_cast<double>(i);
    if (states > budget_)
      throw StateBudgetExceeded("universal elementwise mixture needs " +
                                std::to_string(static_cast<long long>(states)) +
                                " states at level " + std::to_string(level + 1) +
                                ", budget is " +
                                std::to_string(static_cast<long long>(budget_)));
  }
  std::size_t k_;
  double budget_;
};

class FixedShare final : public HmmModel {
 public:
  FixedShare(Distribution w, double alpha) : w_(std::move(w)), alpha_(alpha) {
    check_normalized(w_, "prior");
    check_rate(alpha_, "switching rate");
  }
  std::size_t expert_count() const override { return w_.size(); }
  std::vector<Arc> initial() const override { return {{sid(0, kHub), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    if (q.kind == kHub) {
      for (std::size_t e = 0; e < w_.size(); ++e)
        push(a, sid(q.level + 1, kProd, {as_i32(e)}), w_[e]);
    } else {
      push(a, sid(q.level, kHub), alpha_);
      push(a, sid(q.level + 1, kProd, {q.f[0]}), 1.0 - alpha_);
    }
    return a;
  }
  bool is_productive(const StateId& q) const override { return q.kind == kProd; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 1; }
  bool unambiguous() const override { return true; }
  std::string name() const override { return "fixed-share"; }

 private:
  Distribution w_;
  double alpha_;
};

// Productive (xi, m, n): f[0] = expert, f[1] = switches so far.
// Hub (m, n): f[1] = switches so far.
class UniversalShare final : public HmmModel {
 public:
  explicit UniversalShare(Distribution w) : w_(std::move(w)) { check_normalized(w_, "prior"); }
  std::size_t expert_count() const override { return w_.size(); }
  std::vector<Arc> initial() const override { return {{sid(0, kHub), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    if (q.kind == kHub) {
      for (std::size_t e = 0; e < w_.size(); ++e)
        push(a, sid(q.level + 1, kProd, {as_i32(e), q.f[1]}), w_[e]);
    } else {
      const double n = q.level, m = q.f[1];
      push(a, sid(q.level, kHub, {0, q.f[1] + 1}), (m + 0.5) / n);
      push(a, sid(q.level + 1, kProd, {q.f[0], q.f[1]}), (n - m - 0.5) / n);
    }
    return a;
  }
  bool is_productive(const StateId& q) const override { return q.kind == kProd; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 1; }
  std::string name() const override { return "universal-share"; }

 private:
  Distribution w_;
};

// Normal lane kind 0 emits f[0]; wild lane kind 2 emits the safe expert k.
class Overconfident final : public HmmModel {
 public:
  Overconfident(Distribution w, double alpha) : w_(std::move(w)), alpha_(alpha) {
    check_normalized(w_, "prior");
    check_rate(alpha_, "safe-expert rate");
  }
  std::size_t expert_count() const override { return w_.size() + 1; }
  std::vector<Arc> initial() const override {
    std::vector<Arc> a;
    for (std::size_t e = 0; e < w_.size(); ++e) {
      push(a, sid(1, kNormal, {as_i32(e)}), w_[e] * LogMass::from_prob(1.0 - alpha_));
      push(a, sid(1, kWild, {as_i32(e)}), w_[e] * LogMass::from_prob(alpha_));
    }
    return a;
  }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    push(a, sid(q.level + 1, kNormal, {q.f[0]}), 1.0 - alpha_);
    push(a, sid(q.level + 1, kWild, {q.f[0]}), alpha_);
    return a;
  }
  bool is_productive(const StateId&) const override { return true; }
  ExpertIndex label(const StateId& q) const override {
    return q.kind == kWild ? w_.size() : static_cast<ExpertIndex>(q.f[0]);
  }
  std::size_t silent_depth_bound() const override { return 0; }
  std::string name() const override { return "overconfident"; }

 private:
  static constexpr std::uint16_t kNormal = 0;
  static constexpr std::uint16_t kWild = 2;
  Distribution w_;
  double alpha_;
};

// Silent P(n) picks the band of the next block, PU(n)/PS(n) pick its expert.
// Unstable U(xi, n) may return to P(n); stable S(xi, n) never does.
class Switch final : public HmmModel {
 public:
  Switch(Distribution pi_k, double p_unstable, std::function<double(std::size_t)> escape,
         std::function<double(std::size_t)> stay, std::string name)
      : pi_k_(std::move(pi_k)),
        p_unstable_(p_unstable),
        escape_(std::move(escape)),
        stay_(std::move(stay)),
        name_(std::move(name)) {
    check_normalized(pi_k_, "expert prior");
    check_rate(p_unstable_, "theta");
  }
  std::size_t expert_count() const override { return pi_k_.size(); }
  std::vector<Arc> initial() const override { return {{sid(0, kP), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    switch (q.kind) {
      case kP:
        push(a, sid(q.level, kPU), p_unstable_);
        push(a, sid(q.level, kPS), 1.0 - p_unstable_);
        break;
      case kPU:
      case kPS: {
        const std::uint16_t band = q.kind == kPU ? kU : kS;
        for (std::size_t e = 0; e < pi_k_.size(); ++e)
          push(a, sid(q.level + 1, band, {as_i32(e)}), pi_k_[e]);
        break;
      }
      case kU:
        push(a, sid(q.level, kP), escape_(q.level));
        push(a, sid(q.level + 1, kU, {q.f[0]}), stay_(q.level));
        break;
      default:
        a.push_back({sid(q.level + 1, kS, {q.f[0]}), LogMass::one()});
    }
    return a;
  }
  bool is_productive(const StateId& q) const override { return q.kind == kU || q.kind == kS; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 2; }
  std::string name() const override { return name_; }
  std::string describe(const StateId& q) const override {
    static const char* names[] = {"U", "P", "PU", "PS", "S"};
    std::string s = std::string(names[q.kind]) + "(";
    if (is_productive(q)) s += std::to_string(q.f[0]) + ",";
    return s + std::to_string(q.level) + ")";
  }

 private:
  static constexpr std::uint16_t kU = 0, kP = 1, kPU = 2, kPS = 3, kS = 4;
  Distribution pi_k_;
  double p_unstable_;
  std::function<double(std::size_t)> escape_;
  std::function<double(std::size_t)> stay_;
  std::string name_;
};

// Productive (xi, m, n): f[0] = expert, f[1] = level of the last switch, so
// the current run has length n - m. Hub P(n) draws the next expert.
class RunLength final : public HmmModel {
 public:
  RunLength(TimeLaw law, Distribution w) : law_(std::move(law)), w_(std::move(w)) {
    check_normalized(w_, "prior");
    check_law(law_);
  }
  std::size_t expert_count() const override { return w_.size(); }
  std::vector<Arc> initial() const override { return {{sid(0, kHub), LogMass::one()}}; }
  std::vector<Arc> successors(const StateId& q) const override {
    std::vector<Arc> a;
    if (q.kind == kHub) {
      for (std::size_t e = 0; e < w_.size(); ++e)
        push(a, sid(q.level + 1, kProd, {as_i32(e), as_i32(q.level)}), w_[e]);
    } else {
      const std::size_t run = q.level - static_cast<std::size_t>(q.f[1]);
      push(a, sid(q.level, kHub), law_.hazard(run));
      push(a, sid(q.level + 1, kProd, {q.f[0], q.f[1]}), law_.survive(run));
    }
    return a;
  }
  bool is_productive(const StateId& q) const override { return q.kind == kProd; }
  ExpertIndex label(const StateId& q) const override { return static_cast<ExpertIndex>(q.f[0]); }
  std::size_t silent_depth_bound() const override { return 1; }
  std::string name() const override { return "run-length"; }

 private:
  TimeLaw law_;
  Distribution w_;
};

}  // namespace

ModelPtr bayes(Distribution w) { return std::make_shared<Bayes>(std::move(w)); }

ModelPtr fixed_elementwise(Distribution alpha) {
  return std::make_shared<FixedElementwise>(std::move(alpha));
}

ModelPtr universal_elementwise(std::size_t k, double state_budget) {
  return std::make_shared<UniversalElementwise>(k, state_budget);
}

ModelPtr fixed_share(Distribution w, double alpha) {
  return std::make_shared<FixedShare>(std::move(w), alpha);
}

ModelPtr universal_share(Distribution w) { return std::make_shared<UniversalShare>(std::move(w)); }

ModelPtr overconfident(Distribution w, double alpha) {
  return std::make_shared<Overconfident>(std::move(w), alpha);
}

ExpertList append_safe_expert(ExpertList experts, std::size_t alphabet_size) {
  experts.push_back(uniform_expert(alphabet_size, "safe"));
  return experts;
}

ModelPtr switch_model(const SwitchConfig& cfg) {
  check_law(cfg.pi_t);
  TimeLaw law = cfg.pi_t;
  return std::make_shared<Switch>(
      cfg.pi_k, cfg.theta, [law](std::size_t n) { return law.hazard(n); },
      [law](std::size_t n) { return law.survive(n); }, "switch");
}

ModelPtr switch_unstable_only(Distribution pi_k, double theta) {
  check_rate(theta, "theta");
  return std::make_shared<Switch>(
      std::move(pi_k), 1.0, [theta](std::size_t) { return theta; },
      [theta](std::size_t) { return 1.0 - theta; }, "switch-unstable");
}

LogMass switch_prior_prefix(const SwitchConfig& cfg, std::span<const ExpertIndex> experts) {
  const std::size_t n = experts.size();
  if (n == 0) return LogMass::one();
  if (n > 30) throw InputError("prefix enumeration is limited to 30 outcomes");
  for (ExpertIndex e : experts)
    if (e >= cfg.pi_k.size()) throw InputError("expert index out of range");
  check_law(cfg.pi_t);
  const TimeLaw& law = cfg.pi_t;
  const double theta = cfg.theta;

  // P(no switch at times a+1 .. b-1, given the last one at a).
  auto stay_through = [&](std::size_t a, std::size_t b) {
    double p = 1.0;
    for (std::size_t t = a + 1; t < b; ++t) p *= law.survive(t);
    return p;
  };

  std::vector<LogMass> terms;
  const std::size_t positions = n - 1;  // candidate switch times 1..n-1
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << positions); ++mask) {
    std::vector<std::size_t> starts{0};
    for (std::size_t t = 1; t < n; ++t)
      if (mask >> (t - 1) & 1u) starts.push_back(t);
    bool constant = true;
    for (std::size_t b = 0; b < starts.size() && constant; ++b) {
      const std::size_t end = b + 1 < starts.size() ? starts[b + 1] : n;
      for (std::size_t i = starts[b] + 1; i < end; ++i)
        if (experts[i] != experts[starts[b]]) constant = false;
    }
    if (!constant) continue;

    const std::size_t j = starts.size();
    LogMass m = cfg.pi_k[experts[0]];
    for (std::size_t b = 1; b < j; ++b) {
      const double hop = stay_through(starts[b - 1], starts[b]) * law.hazard(starts[b]);
      m *= LogMass::from_prob(theta * hop) * cfg.pi_k[experts[starts[b]]];
    }
    // Either the j-th block is the last one, or the next switch is at n or later.
    const double closing =
        (1.0 - theta) + theta * stay_through(starts.back(), n);
    m *= LogMass::from_prob(closing);
    if (!m.is_zero()) terms.push_back(m);
  }
  return log_sum(terms);
}

ModelPtr run_length(TimeLaw pi_t, Distribution w) {
  return std::make_shared<RunLength>(std::move(pi_t), std::move(w));
}

}  // namespace esp
