#include "esprior/core.hpp"

#include <cmath>

#include "esprior/errors.hpp"

namespace esp {

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw InputError("alphabet must have at least one symbol");
  for (Symbol i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second)
      throw InputError("duplicate alphabet symbol '" + labels_[i] + "'");
  }
}

std::optional<Symbol> Alphabet::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Symbol Alphabet::index(std::string_view label) const {
  if (auto s = find(label)) return *s;
  throw InputError("symbol '" + std::string(label) + "' is not in the alphabet");
}

Distribution Distribution::from_probs(std::span<const double> p,
                                      double tolerance) {
  if (p.empty()) throw InputError("empty distribution");
  double sum = 0.0;
  Eigen::VectorXd log(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i]))
      throw InputError("distribution entries must be finite and non-negative");
    sum += p[i];
    log(static_cast<Eigen::Index>(i)) = std::log(p[i]);
  }
  if (std::abs(sum - 1.0) > tolerance)
    throw InputError("distribution sums to " + std::to_string(sum) + ", not 1");
  return Distribution(std::move(log));
}

Distribution Distribution::uniform(std::size_t n) {
  if (n == 0) throw InputError("uniform distribution over empty set");
  return Distribution(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n),
                                                -std::log(static_cast<double>(n))));
}

Distribution Distribution::point(std::size_t n, std::size_t at) {
  Eigen::VectorXd log = Eigen::VectorXd::Constant(
      static_cast<Eigen::Index>(n), -std::numeric_limits<double>::infinity());
  log(static_cast<Eigen::Index>(at)) = 0.0;
  return Distribution(std::move(log));
}

LogMass Distribution::total() const {
  std::vector<LogMass> xs(size());
  for (std::size_t i = 0; i < size(); ++i) xs[i] = (*this)[i];
  return log_sum(xs);
}

LogMass sequential_log_loss(const ForecastingSystem& expert,
                            std::span<const Symbol> data) {
  LogMass total = LogMass::one();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] >= expert.alphabet_size())
      throw InputError("symbol index " + std::to_string(data[i]) +
                       " outside alphabet at position " + std::to_string(i + 1));
    total *= expert.probability(data.first(i), data[i]);
  }
  return total;
}

namespace {

class ConstantExpert final : public ForecastingSystem {
 public:
  ConstantExpert(Distribution d, std::string name)
      : d_(std::move(d)), name_(std::move(name)) {}
  std::size_t alphabet_size() const override { return d_.size(); }
  Distribution predict(std::span<const Symbol>) const override { return d_; }
  LogMass probability(std::span<const Symbol>, Symbol next) const override {
    return d_[next];
  }
  std::string name() const override { return name_; }

 private:
  Distribution d_;
  std::string name_;
};

// Additive-smoothing estimators: (n_x + a) / (n + a|X|).
class CountingEstimator final : public ForecastingSystem {
 public:
  CountingEstimator(std::size_t size, double pseudo, std::string name)
      : size_(size), pseudo_(pseudo), name_(std::move(name)) {}
  std::size_t alphabet_size() const override { return size_; }
  Distribution predict(std::span<const Symbol> history) const override {
    Eigen::VectorXd counts = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(size_), pseudo_);
    for (Symbol s : history) counts(static_cast<Eigen::Index>(s)) += 1.0;
    const double denom = static_cast<double>(history.size()) +
                         pseudo_ * static_cast<double>(size_);
    return Distribution((counts.array() / denom).log().matrix());
  }
  LogMass probability(std::span<const Symbol> history,
                      Symbol next) const override {
    double count = pseudo_;
    for (Symbol s : history) count += (s == next) ? 1.0 : 0.0;
    return LogMass::from_prob(count / (static_cast<double>(history.size()) +
                                       pseudo_ * static_cast<double>(size_)));
  }
  std::string name() const override { return name_; }

 private:
  std::size_t size_;
  double pseudo_;
  std::string name_;
};

class MarkovSource final : public ForecastingSystem {
 public:
  MarkovSource(Distribution initial, std::vector<Distribution> rows,
               std::string name)
      : initial_(std::move(initial)), rows_(std::move(rows)), name_(std::move(name)) {}
  std::size_t alphabet_size() const override { return initial_.size(); }
  Distribution predict(std::span<const Symbol> history) const override {
    return history.empty() ? initial_ : rows_.at(history.back());
  }
  std::string name() const override { return name_; }

 private:
  Distribution initial_;
  std::vector<Distribution> rows_;
  std::string name_;
};

class TabulatedExpert final : public ForecastingSystem {
 public:
  TabulatedExpert(std::vector<Distribution> rows, std::string name)
      : rows_(std::move(rows)), name_(std::move(name)) {
    if (rows_.empty()) throw InputError("advice table for '" + name_ + "' is empty");
  }
  std::size_t alphabet_size() const override { return rows_.front().size(); }
  Distribution predict(std::span<const Symbol> history) const override {
    if (history.size() >= rows_.size())
      throw ContractError("no advice row for step " +
                          std::to_string(history.size() + 1) + " of '" + name_ + "'");
    return rows_[history.size()];
  }
  std::string name() const override { return name_; }

 private:
  std::vector<Distribution> rows_;
  std::string name_;
};

class RealizedAdviceExpert final : public ForecastingSystem {
 public:
  RealizedAdviceExpert(std::vector<LogMass> realized, std::vector<Symbol> data,
                       std::size_t size, std::string name)
      : realized_(std::move(realized)),
        data_(std::move(data)),
        size_(size),
        name_(std::move(name)) {}
  std::size_t alphabet_size() const override { return size_; }
  bool full_predictions() const override { return false; }
  Distribution predict(std::span<const Symbol>) const override {
    throw UnsupportedError("expert '" + name_ +
                           "' only provides realized-outcome probabilities");
  }
  LogMass probability(std::span<const Symbol> history,
                      Symbol next) const override {
    const std::size_t i = history.size();
    if (i >= realized_.size() || data_[i] != next)
      throw ContractError("expert '" + name_ +
                          "' has no probability for this outcome at step " +
                          std::to_string(i + 1));
    return realized_[i];
  }
  std::string name() const override { return name_; }

 private:
  std::vector<LogMass> realized_;
  std::vector<Symbol> data_;
  std::size_t size_;
  std::string name_;
};

Distribution checked_row(const std::vector<double>& row, std::size_t size) {
  if (row.size() != size)
    throw InputError("expert distribution has " + std::to_string(row.size()) +
                     " entries, alphabet has " + std::to_string(size));
  return Distribution::from_probs(row);
}

}  // namespace

ExpertPtr constant_expert(Distribution d, std::string name) {
  return std::make_shared<ConstantExpert>(std::move(d), std::move(name));
}

ExpertPtr uniform_expert(std::size_t alphabet_size, std::string name) {
  return constant_expert(Distribution::uniform(alphabet_size), std::move(name));
}

ExpertPtr kt_estimator(std::size_t alphabet_size, std::string name) {
  return std::make_shared<CountingEstimator>(alphabet_size, 0.5, std::move(name));
}

ExpertPtr laplace_estimator(std::size_t alphabet_size, std::string name) {
  return std::make_shared<CountingEstimator>(alphabet_size, 1.0, std::move(name));
}

ExpertPtr markov_source(Distribution initial, std::vector<Distribution> rows,
                        std::string name) {
  if (rows.size() != initial.size())
    throw InputError("markov source needs one transition row per symbol");
  for (const auto& r : rows)
    if (r.size() != initial.size())
      throw InputError("markov transition row has wrong arity");
  return std::make_shared<MarkovSource>(std::move(initial), std::move(rows),
                                        std::move(name));
}

ExpertPtr tabulated_expert(std::vector<Distribution> rows, std::string name) {
  return std::make_shared<TabulatedExpert>(std::move(rows), std::move(name));
}

ExpertPtr realized_advice_expert(std::vector<LogMass> realized,
                                 std::vector<Symbol> data,
                                 std::size_t alphabet_size, std::string name) {
  if (realized.size() != data.size())
    throw InputError("realized advice length does not match data length");
  return std::make_shared<RealizedAdviceExpert>(
      std::move(realized), std::move(data), alphabet_size, std::move(name));
}

ExpertPtr make_builtin_expert(const BuiltinExpertSpec& spec,
                              std::size_t alphabet_size) {
  using Kind = BuiltinExpertSpec::Kind;
  if (alphabet_size == 0) throw InputError("empty alphabet");
  switch (spec.kind) {
    case Kind::constant:
      if (spec.rows.size() != 1)
        throw InputError("constant expert takes exactly one distribution");
      return constant_expert(checked_row(spec.rows[0], alphabet_size),
                             spec.name.empty() ? "const" : spec.name);
    case Kind::kt:
      if (!spec.rows.empty()) throw InputError("kt estimator takes no parameters");
      return kt_estimator(alphabet_size, spec.name.empty() ? "kt" : spec.name);
    case Kind::laplace:
      if (!spec.rows.empty()) throw InputError("laplace estimator takes no parameters");
      return laplace_estimator(alphabet_size,
                               spec.name.empty() ? "laplace" : spec.name);
    case Kind::uniform:
      if (!spec.rows.empty()) throw InputError("uniform expert takes no parameters");
      return uniform_expert(alphabet_size, spec.name.empty() ? "uniform" : spec.name);
    case Kind::markov: {
      if (spec.rows.size() != alphabet_size + 1)
        throw InputError("markov source needs an initial row plus " +
                         std::to_string(alphabet_size) + " transition rows");
      std::vector<Distribution> rows;
      for (std::size_t i = 1; i < spec.rows.size(); ++i)
        rows.push_back(checked_row(spec.rows[i], alphabet_size));
      return markov_source(checked_row(spec.rows[0], alphabet_size),
                           std::move(rows), spec.name.empty() ? "markov" : spec.name);
    }
  }
  throw InputError("unknown expert kind");
}

}  // namespace esp
