#include "esprior/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "esprior/errors.hpp"
#include "esprior/forward.hpp"

namespace esp {

std::string HmmModel::describe(const StateId& q) const {
  std::string s = "L" + std::to_string(q.level) + (is_productive(q) ? "p" : "s") +
                  std::to_string(q.kind) + "(";
  for (std::size_t i = 0; i < q.f.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(q.f[i]);
  }
  return s + ")";
}

bool ValidationReport::has(Violation::Kind k) const {
  return std::any_of(violations.begin(), violations.end(),
                     [k](const Violation& v) { return v.kind == k; });
}

namespace {

struct Explored {
  std::vector<StateId> order;  // discovery order
  std::unordered_map<StateId, std::vector<Arc>, StateIdHash> arcs;
};

// Every state reachable without expanding productive states of level `levels`.
Explored explore(const HmmModel& model, std::size_t levels) {
  Explored ex;
  std::unordered_set<StateId, StateIdHash> seen;
  std::deque<StateId> queue;
  auto visit = [&](const StateId& q) {
    if (seen.insert(q).second) {
      ex.order.push_back(q);
      queue.push_back(q);
    }
  };
  for (const Arc& a : model.initial()) visit(a.to);
  while (!queue.empty()) {
    StateId q = queue.front();
    queue.pop_front();
    if (q.level >= levels && (model.is_productive(q) || q.level > levels)) continue;
    auto succ = model.successors(q);
    for (const Arc& a : succ) visit(a.to);
    ex.arcs.emplace(q, std::move(succ));
  }
  return ex;
}

}  // namespace

ValidationReport validate(const HmmModel& model, std::size_t levels, double tolerance) {
  ValidationReport rep;
  using K = Violation::Kind;
  auto flag = [&](K k, const StateId* q, std::string msg) {
    rep.violations.push_back({k, q ? model.describe(*q) : std::string("<initial>"),
                              std::move(msg)});
  };
  auto check_arcs = [&](const StateId* src, const std::vector<Arc>& arcs,
                        std::uint32_t base) {
    std::vector<LogMass> ms;
    for (const Arc& a : arcs) {
      ms.push_back(a.mass);
      const bool prod = model.is_productive(a.to);
      const std::uint32_t want = prod ? base + 1 : base;
      if (a.to.level != want)
        flag(K::level, src,
             "successor " + model.describe(a.to) + " has level " +
                 std::to_string(a.to.level) + ", expected " + std::to_string(want));
      if (prod && model.label(a.to) >= model.expert_count())
        flag(K::label, &a.to, "label outside the expert set");
    }
    const double total = log_sum(ms).prob();
    if (std::abs(total - 1.0) > tolerance)
      flag(K::normalization, src, "outgoing mass sums to " + std::to_string(total));
  };

  check_arcs(nullptr, model.initial(), 0);
  const Explored ex = explore(model, levels);
  for (const auto& q : ex.order) {
    auto it = ex.arcs.find(q);
    if (it != ex.arcs.end()) check_arcs(&q, it->second, q.level);
  }

  // Longest silent run through each silent state; a cycle counts as unbounded.
  std::unordered_map<StateId, std::size_t, StateIdHash> depth;
  std::unordered_set<StateId, StateIdHash> on_stack;
  bool cycle = false;
  auto longest = [&](auto&& self, const StateId& s) -> std::size_t {
    if (auto d = depth.find(s); d != depth.end()) return d->second;
    if (!on_stack.insert(s).second) {
      if (!cycle) flag(K::silent_depth, &s, "silent cycle");
      cycle = true;
      return 0;
    }
    std::size_t best = 0;
    if (auto it = ex.arcs.find(s); it != ex.arcs.end())
      for (const Arc& a : it->second)
        if (!model.is_productive(a.to)) best = std::max(best, self(self, a.to));
    on_stack.erase(s);
    depth[s] = best + 1;
    return best + 1;
  };
  const std::size_t bound = model.silent_depth_bound();
  for (const auto& q : ex.order) {
    if (model.is_productive(q)) continue;
    const std::size_t d = longest(longest, q);
    if (d > bound)
      flag(K::silent_depth, &q,
           "silent run of length " + std::to_string(d) + " exceeds bound " +
               std::to_string(bound));
  }
  return rep;
}

std::vector<LevelCensus> census(const HmmModel& model, std::size_t levels) {
  std::vector<LevelCensus> out(levels + 1);
  const Explored ex = explore(model, levels);
  for (const auto& q : ex.order) {
    if (q.level > levels) continue;
    auto& c = out[q.level];
    ++c.states;
    if (model.is_productive(q)) ++c.productive;
    if (auto it = ex.arcs.find(q); it != ex.arcs.end()) c.arcs += it->second.size();
  }
  return out;
}

namespace {

class EliminatedModel final : public HmmModel {
 public:
  EliminatedModel(ModelPtr base, StateId gone)
      : base_(std::move(base)), gone_(gone), bypass_(base_->successors(gone_)) {
    for (const Arc& a : bypass_)
      if (a.to == gone_)
        throw ContractError("cannot eliminate a state with a self-transition");
  }

  std::size_t expert_count() const override { return base_->expert_count(); }
  std::vector<Arc> initial() const override { return rewrite(base_->initial()); }
  std::vector<Arc> successors(const StateId& q) const override {
    return rewrite(base_->successors(q));
  }
  bool is_productive(const StateId& q) const override { return base_->is_productive(q); }
  ExpertIndex label(const StateId& q) const override { return base_->label(q); }
  std::size_t silent_depth_bound() const override { return base_->silent_depth_bound(); }
  bool unambiguous() const override { return base_->unambiguous(); }
  std::string name() const override { return base_->name(); }
  std::string describe(const StateId& q) const override { return base_->describe(q); }

 private:
  std::vector<Arc> rewrite(std::vector<Arc> arcs) const {
    if (std::none_of(arcs.begin(), arcs.end(), [&](const Arc& a) { return a.to == gone_; }))
      return arcs;
    std::vector<Arc> out;
    auto add = [&out](const StateId& to, LogMass m) {
      for (Arc& a : out)
        if (a.to == to) {
          a.mass = log_sum(a.mass, m);
          return;
        }
      out.push_back({to, m});
    };
    for (const Arc& a : arcs) {
      if (a.to == gone_) {
        for (const Arc& b : bypass_) add(b.to, a.mass * b.mass);
      } else {
        add(a.to, a.mass);
      }
    }
    return out;
  }

  ModelPtr base_;
  StateId gone_;
  std::vector<Arc> bypass_;
};

}  // namespace

ModelPtr eliminate_silent(ModelPtr model, const StateId& state) {
  if (model->is_productive(state))
    throw ContractError("only silent states can be eliminated");
  for (const Arc& a : model->initial())
    if (a.to == state) throw ContractError("initial states cannot be eliminated");
  return std::make_shared<EliminatedModel>(std::move(model), state);
}

LogMass expert_sequence_prior(const HmmModel& model, std::span<const ExpertIndex> experts) {
  const std::size_t k = model.expert_count();
  for (ExpertIndex e : experts)
    if (e >= k) throw InputError("expert index " + std::to_string(e) + " out of range");
  ForwardPass pass(model);
  std::vector<LogMass> row(k, LogMass::zero());
  for (ExpertIndex e : experts) {
    pass.propagate();
    std::fill(row.begin(), row.end(), LogMass::zero());
    row[e] = LogMass::one();
    pass.update(row);
    if (pass.weights().empty()) return LogMass::zero();
  }
  return experts.empty() ? LogMass::one() : pass.mass();
}

}  // namespace esp
