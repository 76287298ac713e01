#include "esprior/forward.hpp"

#include <algorithm>
#include <deque>
#include <mutex>

#include "esprior/approx.hpp"
#include "esprior/errors.hpp"

namespace esp {

LogMass WeightMap::at(const StateId& q) const {
  auto it = index_.find(q);
  return it == index_.end() ? LogMass::zero() : entries_[it->second].second;
}

void WeightMap::accumulate(const StateId& q, LogMass m) {
  auto [it, fresh] = index_.emplace(q, entries_.size());
  if (fresh) {
    entries_.emplace_back(q, m);
  } else {
    auto& w = entries_[it->second].second;
    w = log_sum(w, m);
  }
}

void WeightMap::assign(std::vector<Entry> entries) {
  clear();
  for (auto& [q, m] : entries) accumulate(q, m);
}

LogMass WeightMap::total() const {
  std::vector<LogMass> xs;
  xs.reserve(entries_.size());
  for (const auto& e : entries_) xs.push_back(e.second);
  return log_sum(xs);
}

void WeightMap::clear() {
  entries_.clear();
  index_.clear();
}

ForwardPass::ForwardPass(const HmmModel& model, ForwardOptions options)
    : model_(&model), options_(options) {
  if (options_.trim && !(*options_.trim > 0.0 && *options_.trim <= 1.0))
    throw InputError("trim fraction must lie in (0, 1]");
}

std::size_t ForwardPass::transitions_total() const {
  std::size_t t = 0;
  for (auto v : transitions_) t += v;
  return t;
}

void ForwardPass::propagate() {
  const auto from = static_cast<std::uint32_t>(level_);
  const auto to = from + 1;
  std::size_t touched = 0;
  LevelTrace trace;

  WeightMap silent;  // incoming mass of silent states in [from, to)
  WeightMap out;     // productive states of level `to`
  std::vector<StateId> order;  // silent states in discovery order
  std::unordered_map<StateId, std::vector<Arc>, StateIdHash> arcs;
  std::unordered_map<StateId, std::size_t, StateIdHash> indegree;

  auto route = [&](const StateId& src, const Arc& a, LogMass w) {
    ++touched;
    const LogMass m = w * a.mass;
    if (model_->is_productive(a.to)) {
      if (a.to.level != to)
        throw ContractError(model_->name() + ": productive successor of " +
                            model_->describe(src) + " has level " +
                            std::to_string(a.to.level) + ", expected " +
                            std::to_string(to));
      out.accumulate(a.to, m);
    } else {
      if (a.to.level != from)
        throw ContractError(model_->name() + ": silent successor of " +
                            model_->describe(src) + " has level " +
                            std::to_string(a.to.level) + ", expected " +
                            std::to_string(from));
      silent.accumulate(a.to, m);
    }
  };

  StateId origin;  // placeholder source for the initial arcs
  if (level_ == 0 && weights_.empty()) {
    for (const Arc& a : model_->initial()) route(origin, a, LogMass::one());
  } else {
    if (weights_.empty())
      throw ContractError("propagate called on an empty frontier");
    for (const auto& [q, w] : weights_.entries()) {
      auto succ = model_->successors(q);
      for (const Arc& a : succ) route(q, a, w);
      if (options_.record_trace) trace.nodes.emplace_back(q, std::move(succ));
    }
  }

  // Discover the silent sub-DAG reachable from the seeds.
  std::deque<StateId> frontier;
  for (const auto& [q, w] : silent.entries()) {
    order.push_back(q);
    indegree.emplace(q, 0);
    frontier.push_back(q);
  }
  while (!frontier.empty()) {
    StateId s = frontier.front();
    frontier.pop_front();
    auto succ = model_->successors(s);
    for (const Arc& a : succ) {
      if (model_->is_productive(a.to)) continue;
      if (a.to.level != from)
        throw ContractError(model_->name() + ": silent successor of " +
                            model_->describe(s) + " leaves the level");
      auto [it, fresh] = indegree.emplace(a.to, 0);
      ++it->second;
      if (fresh) {
        order.push_back(a.to);
        frontier.push_back(a.to);
      }
    }
    arcs.emplace(s, std::move(succ));
  }

  // Kahn order, FIFO among ready states.
  std::unordered_map<StateId, std::size_t, StateIdHash> depth;
  std::deque<StateId> ready;
  for (const auto& q : order)
    if (indegree[q] == 0) {
      ready.push_back(q);
      depth[q] = 1;
    }
  std::size_t processed = 0;
  const std::size_t bound = model_->silent_depth_bound();
  while (!ready.empty()) {
    StateId s = ready.front();
    ready.pop_front();
    ++processed;
    const std::size_t d = depth[s];
    if (d > bound)
      throw ContractError(model_->name() + ": silent run longer than the declared bound " +
                          std::to_string(bound) + " at " + model_->describe(s));
    const LogMass w = silent.at(s);
    auto& succ = arcs[s];
    for (const Arc& a : succ) {
      route(s, a, w);
      if (!model_->is_productive(a.to)) {
        auto& dd = depth[a.to];
        dd = std::max(dd, d + 1);
        if (--indegree[a.to] == 0) ready.push_back(a.to);
      }
    }
    if (options_.record_trace) trace.nodes.emplace_back(s, std::move(succ));
  }
  if (processed != order.size())
    throw ContractError(model_->name() + ": silent cycle between levels " +
                        std::to_string(from) + " and " + std::to_string(to));

  peak_weights_ = std::max(peak_weights_, silent.size() + out.size());
  transitions_.push_back(touched);
  if (options_.record_trace) trace_.push_back(std::move(trace));
  weights_ = std::move(out);
  level_ = to;
}

void ForwardPass::update(std::span<const LogMass> emission) {
  if (emission.size() != model_->expert_count())
    throw ContractError("emission row has " + std::to_string(emission.size()) +
                        " entries, model has " +
                        std::to_string(model_->expert_count()) + " experts");
  std::vector<WeightMap::Entry> kept;
  kept.reserve(weights_.size());
  for (const auto& [q, w] : weights_.entries()) {
    const LogMass m = w * emission[model_->label(q)];
    if (!m.is_zero()) kept.emplace_back(q, m);
  }
  if (options_.trim && !kept.empty()) kept = trim_frontier(kept, *options_.trim);
  weights_.assign(std::move(kept));
}

Distribution ForwardPass::next_expert() const {
  const std::size_t k = model_->expert_count();
  std::vector<std::vector<LogMass>> by_label(k);
  for (const auto& [q, w] : weights_.entries()) by_label[model_->label(q)].push_back(w);
  Eigen::VectorXd log(static_cast<Eigen::Index>(k));
  for (std::size_t e = 0; e < k; ++e)
    log(static_cast<Eigen::Index>(e)) = log_sum(by_label[e]).log();
  const LogMass total = weights_.total();
  if (total.is_zero()) throw ContractError("expert posterior of an empty frontier");
  log.array() -= total.log();
  return Distribution(std::move(log));
}

std::vector<LogMass> emission_row(const ExpertList& experts,
                                  std::span<const Symbol> history, Symbol next) {
  std::vector<LogMass> row;
  row.reserve(experts.size());
  for (const auto& e : experts) row.push_back(e->probability(history, next));
  return row;
}

namespace {

void check_ensemble(const HmmModel& model, const ExpertList& experts) {
  if (experts.size() != model.expert_count())
    throw InputError(model.name() + " expects " + std::to_string(model.expert_count()) +
                     " experts, got " + std::to_string(experts.size()));
  for (const auto& e : experts)
    if (e->alphabet_size() != experts.front()->alphabet_size())
      throw InputError("experts disagree on the alphabet size");
}

void check_data(const ExpertList& experts, std::span<const Symbol> data) {
  const std::size_t size = experts.empty() ? 0 : experts.front()->alphabet_size();
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i] >= size)
      throw InputError("symbol index " + std::to_string(data[i]) +
                       " outside alphabet at position " + std::to_string(i + 1));
}

}  // namespace

SequentialPredictor::SequentialPredictor(ModelPtr model, ExpertList experts,
                                         ForwardOptions options)
    : model_(std::move(model)), experts_(std::move(experts)), pass_(*model_, options) {
  check_ensemble(*model_, experts_);
  pass_.propagate();
  pre_update_mass_ = pass_.mass();
}

Distribution SequentialPredictor::next_expert() const { return pass_.next_expert(); }

std::optional<Distribution> SequentialPredictor::next_outcome() const {
  for (const auto& e : experts_)
    if (!e->full_predictions()) return std::nullopt;
  const Distribution w = next_expert();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(experts_.front()->alphabet_size()));
  for (std::size_t e = 0; e < experts_.size(); ++e) {
    if (w[e].is_zero()) continue;
    p += w.prob(e) * experts_[e]->predict(history_).probs();
  }
  return Distribution(p.array().log().matrix());
}

LogMass SequentialPredictor::observe(Symbol x) {
  if (x >= experts_.front()->alphabet_size())
    throw InputError("symbol index " + std::to_string(x) + " outside alphabet at position " +
                     std::to_string(history_.size() + 1));
  const auto row = emission_row(experts_, history_, x);
  pass_.update(row);
  const LogMass after = pass_.mass();
  if (after.is_zero()) throw ZeroMarginalError(history_.size() + 1);
  const LogMass step = after / pre_update_mass_;
  marginal_ = after;
  history_.push_back(x);
  pass_.propagate();
  pre_update_mass_ = pass_.mass();
  return step;
}

ForwardResult forward_marginal(ModelPtr model, const ExpertList& experts,
                               std::span<const Symbol> data, ForwardOptions options) {
  check_data(experts, data);
  SequentialPredictor p(std::move(model), experts, options);
  const bool full = std::all_of(experts.begin(), experts.end(),
                                [](const ExpertPtr& e) { return e->full_predictions(); });
  ForwardResult r;
  for (Symbol x : data) {
    r.next_expert.push_back(p.next_expert());
    if (full) r.next_outcome.push_back(*p.next_outcome());
    r.pre_update_mass.push_back(p.pass().mass());
    r.step_probability.push_back(p.observe(x));
  }
  r.next_expert.push_back(p.next_expert());
  r.marginal = p.marginal();
  r.transitions_per_level = p.pass().transitions_per_level();
  r.peak_weights = p.pass().peak_weights();
  return r;
}

PosteriorGrid posterior_experts(const HmmModel& model, const ExpertList& experts,
                                std::span<const Symbol> data) {
  check_ensemble(model, experts);
  check_data(experts, data);
  const std::size_t n = data.size();
  const std::size_t k = model.expert_count();

  std::vector<std::vector<LogMass>> emit(n);
  for (std::size_t i = 0; i < n; ++i) emit[i] = emission_row(experts, data.first(i), data[i]);

  ForwardOptions opt;
  opt.record_trace = true;
  ForwardPass pass(model, opt);
  std::vector<WeightMap> alpha(n + 1);  // alpha[i]: level i, after emission i
  for (std::size_t i = 0; i < n; ++i) {
    pass.propagate();
    pass.update(emit[i]);
    if (pass.weights().empty()) throw ZeroMarginalError(i + 1);
    alpha[i + 1] = pass.weights();
  }

  PosteriorGrid grid;
  grid.log_mass = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(k),
                                            -std::numeric_limits<double>::infinity());
  if (n == 0) return grid;

  // beta[q]: P(x_{i+1..n} | q at level i after its emission).
  std::unordered_map<StateId, LogMass, StateIdHash> beta;
  for (const auto& [q, w] : alpha[n].entries()) beta[q] = LogMass::one();

  for (std::size_t i = n; i >= 1; --i) {
    std::vector<std::vector<LogMass>> by_label(k);
    for (const auto& [q, w] : alpha[i].entries()) {
      auto it = beta.find(q);
      if (it != beta.end()) by_label[model.label(q)].push_back(w * it->second);
    }
    std::vector<LogMass> row(k);
    for (std::size_t e = 0; e < k; ++e) row[e] = log_sum(by_label[e]);
    const LogMass total = log_sum(row);
    for (std::size_t e = 0; e < k; ++e)
      grid.log_mass(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(e)) =
          (row[e] / total).log();
    if (i == 1) break;

    // Backward through interval [i-1, i) recorded in trace[i-1].
    std::unordered_map<StateId, LogMass, StateIdHash> b;
    const auto& nodes = pass.trace()[i - 1].nodes;
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
      std::vector<LogMass> terms;
      for (const Arc& a : it->second) {
        if (model.is_productive(a.to)) {
          auto bt = beta.find(a.to);
          if (bt == beta.end()) continue;
          terms.push_back(a.mass * emit[i - 1][model.label(a.to)] * bt->second);
        } else {
          auto bt = b.find(a.to);
          if (bt != b.end()) terms.push_back(a.mass * bt->second);
        }
      }
      b[it->first] = log_sum(terms);
    }
    std::unordered_map<StateId, LogMass, StateIdHash> next;
    for (const auto& [q, w] : alpha[i - 1].entries()) {
      auto bt = b.find(q);
      if (bt != b.end()) next[q] = bt->second;
    }
    beta = std::move(next);
  }
  return grid;
}

namespace {

// Sum over silent paths from one state to the productive states of the
// next level, memoized per silent state.
class SilentReach {
 public:
  explicit SilentReach(const HmmModel& model) : model_(model) {}

  std::vector<std::pair<StateId, LogMass>> from(const std::vector<Arc>& arcs) {
    WeightMap acc;
    for (const Arc& a : arcs) {
      if (model_.is_productive(a.to)) {
        acc.accumulate(a.to, a.mass);
      } else {
        for (const auto& [q, m] : of(a.to)) acc.accumulate(q, a.mass * m);
      }
    }
    return acc.entries();
  }

  void reset() { memo_.clear(); }

 private:
  const std::vector<std::pair<StateId, LogMass>>& of(const StateId& s) {
    auto it = memo_.find(s);
    if (it != memo_.end()) {
      if (!it->second.done)
        throw ContractError(model_.name() + ": silent cycle at " + model_.describe(s));
      return it->second.reach;
    }
    memo_[s].done = false;
    auto r = from(model_.successors(s));
    auto& slot = memo_[s];
    slot.reach = std::move(r);
    slot.done = true;
    return slot.reach;
  }

  struct Slot {
    bool done = false;
    std::vector<std::pair<StateId, LogMass>> reach;
  };
  const HmmModel& model_;
  std::unordered_map<StateId, Slot, StateIdHash> memo_;
};

}  // namespace

ExpertPath viterbi_unambiguous(const HmmModel& model, const ExpertList& experts,
                               std::span<const Symbol> data) {
  if (!model.unambiguous())
    throw ContractError(model.name() + " is not unambiguous; use the model-specific MAP");
  check_ensemble(model, experts);
  check_data(experts, data);
  ExpertPath path;
  const std::size_t n = data.size();
  if (n == 0) {
    path.joint = LogMass::one();
    return path;
  }

  struct Cell {
    LogMass score;
    std::size_t back;  // index into the previous level's states
  };
  std::vector<std::vector<StateId>> states(n);
  std::vector<std::vector<Cell>> cells(n);

  SilentReach reach(model);
  auto better = [&](LogMass cand, std::size_t cand_back, const Cell& cur,
                    const std::vector<StateId>& prev) {
    if (cand > cur.score) return true;
    if (cand < cur.score || cand.is_zero()) return false;
    const auto& a = prev[cand_back];
    const auto& b = prev[cur.back];
    const auto la = model.label(a), lb = model.label(b);
    return la != lb ? la < lb : a < b;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto row = emission_row(experts, data.first(i), data[i]);
    std::unordered_map<StateId, std::size_t, StateIdHash> slot;
    auto relax = [&](const StateId& q, LogMass score, std::size_t back) {
      const LogMass s = score * row[model.label(q)];
      if (s.is_zero()) return;
      auto [it, fresh] = slot.emplace(q, states[i].size());
      if (fresh) {
        states[i].push_back(q);
        cells[i].push_back({s, back});
      } else if (i > 0 && better(s, back, cells[i][it->second], states[i - 1])) {
        cells[i][it->second] = {s, back};
      }
    };
    reach.reset();
    if (i == 0) {
      for (const auto& [q, m] : reach.from(model.initial())) relax(q, m, 0);
    } else {
      for (std::size_t p = 0; p < states[i - 1].size(); ++p) {
        const LogMass base = cells[i - 1][p].score;
        for (const auto& [q, m] : reach.from(model.successors(states[i - 1][p])))
          relax(q, base * m, p);
      }
    }
    if (states[i].empty()) throw ZeroMarginalError(i + 1);
  }

  std::size_t best = 0;
  for (std::size_t j = 1; j < states[n - 1].size(); ++j) {
    const auto& c = cells[n - 1][j];
    const auto& b = cells[n - 1][best];
    if (c.score > b.score) {
      best = j;
    } else if (c.score == b.score) {
      const auto lc = model.label(states[n - 1][j]), lb = model.label(states[n - 1][best]);
      if (lc < lb || (lc == lb && states[n - 1][j] < states[n - 1][best])) best = j;
    }
  }
  path.joint = cells[n - 1][best].score;
  path.experts.resize(n);
  for (std::size_t i = n; i-- > 0;) {
    path.experts[i] = model.label(states[i][best]);
    best = cells[i][best].back;
  }
  return path;
}

namespace {

class MetaExpert final : public ForecastingSystem {
 public:
  MetaExpert(ModelPtr model, ExpertList experts, std::string name)
      : model_(std::move(model)), experts_(std::move(experts)), name_(std::move(name)) {
    check_ensemble(*model_, experts_);
    if (experts_.empty()) throw InputError("meta expert needs at least one expert");
  }

  std::size_t alphabet_size() const override { return experts_.front()->alphabet_size(); }
  bool full_predictions() const override {
    return std::all_of(experts_.begin(), experts_.end(),
                       [](const ExpertPtr& e) { return e->full_predictions(); });
  }
  std::string name() const override { return name_; }

  Distribution predict(std::span<const Symbol> history) const override {
    if (!full_predictions())
      throw UnsupportedError("meta expert '" + name_ + "' wraps realized-only advice");
    std::lock_guard lock(mutex_);
    if (!advance(history)) return Distribution::uniform(alphabet_size());
    return *cache_->next_outcome();
  }

  LogMass probability(std::span<const Symbol> history, Symbol next) const override {
    std::lock_guard lock(mutex_);
    if (!advance(history)) return LogMass::from_prob(1.0 / static_cast<double>(alphabet_size()));
    const Distribution w = cache_->next_expert();
    std::vector<LogMass> terms;
    for (std::size_t e = 0; e < experts_.size(); ++e)
      if (!w[e].is_zero()) terms.push_back(w[e] * experts_[e]->probability(history, next));
    return log_sum(terms);
  }

 private:
  // Brings the cached predictor to `history`. False if the history has
  // probability zero, in which case callers fall back to uniform.
  bool advance(std::span<const Symbol> history) const {
    if (dead_ && dead_->size() <= history.size() &&
        std::equal(dead_->begin(), dead_->end(), history.begin()))
      return false;
    if (!cache_ || cache_->history().size() > history.size() ||
        !std::equal(cache_->history().begin(), cache_->history().end(), history.begin()))
      cache_.emplace(model_, experts_);
    try {
      for (std::size_t i = cache_->history().size(); i < history.size(); ++i)
        cache_->observe(history[i]);
    } catch (const ZeroMarginalError& e) {
      dead_.emplace(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(e.step()));
      cache_.reset();
      return false;
    }
    return true;
  }

  ModelPtr model_;
  ExpertList experts_;
  std::string name_;
  mutable std::mutex mutex_;
  mutable std::optional<SequentialPredictor> cache_;
  mutable std::optional<std::vector<Symbol>> dead_;  // shortest impossible prefix seen
};

}  // namespace

ExpertPtr model_as_expert(ModelPtr model, ExpertList experts, std::string name) {
  return std::make_shared<MetaExpert>(std::move(model), std::move(experts), std::move(name));
}

}  // namespace esp
