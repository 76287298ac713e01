#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "esprior/numerics.hpp"

namespace esp {

using Symbol = std::size_t;
using ExpertIndex = std::size_t;

/// Finite outcome space with a label <-> index bijection.
class Alphabet {
 public:
  explicit Alphabet(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(Symbol s) const { return labels_.at(s); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<Symbol> find(std::string_view label) const;
  /// Throws InputError for labels outside the alphabet.
  Symbol index(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Symbol> index_;
};

/// Probability mass function over {0, ..., size-1}, stored as log-masses.
class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(Eigen::VectorXd log_masses)
      : log_(std::move(log_masses)) {}

  /// Throws InputError if `p` has negative entries or does not sum to one
  /// within `tolerance`.
  static Distribution from_probs(std::span<const double> p,
                                 double tolerance = 1e-9);
  static Distribution uniform(std::size_t n);
  static Distribution point(std::size_t n, std::size_t at);

  std::size_t size() const { return static_cast<std::size_t>(log_.size()); }
  LogMass operator[](std::size_t i) const {
    return LogMass(log_(static_cast<Eigen::Index>(i)));
  }
  double prob(std::size_t i) const { return std::exp(log_(static_cast<Eigen::Index>(i))); }
  Eigen::VectorXd probs() const { return log_.array().exp().matrix(); }
  const Eigen::VectorXd& log_masses() const { return log_; }
  LogMass total() const;

 private:
  Eigen::VectorXd log_;
};

/// Prequential forecasting system: maps a history to a distribution on the
/// next outcome. Must answer for every history, including ones it assigned
/// probability zero.
class ForecastingSystem {
 public:
  virtual ~ForecastingSystem() = default;

  virtual std::size_t alphabet_size() const = 0;
  virtual Distribution predict(std::span<const Symbol> history) const = 0;
  virtual LogMass probability(std::span<const Symbol> history,
                              Symbol next) const {
    return predict(history)[next];
  }
  /// False for experts that only know the probability of the realized
  /// outcome; `predict` then throws UnsupportedError.
  virtual bool full_predictions() const { return true; }
  virtual std::string name() const = 0;
};

using ExpertPtr = std::shared_ptr<const ForecastingSystem>;
using ExpertList = std::vector<ExpertPtr>;

/// Sum of log P(x_i | x^{i-1}); zero mass if any factor is zero.
LogMass sequential_log_loss(const ForecastingSystem& expert,
                            std::span<const Symbol> data);

struct BuiltinExpertSpec {
  enum class Kind { constant, kt, laplace, markov, uniform };
  Kind kind = Kind::uniform;
  /// constant: one row (the distribution). markov: first row is the initial
  /// distribution, then one transition row per symbol.
  std::vector<std::vector<double>> rows;
  std::string name;
};

ExpertPtr make_builtin_expert(const BuiltinExpertSpec& spec,
                              std::size_t alphabet_size);

ExpertPtr constant_expert(Distribution d, std::string name = "const");
ExpertPtr uniform_expert(std::size_t alphabet_size, std::string name = "uniform");
/// Krichevsky-Trofimov: (n_x + 1/2) / (n + |X|/2).
ExpertPtr kt_estimator(std::size_t alphabet_size, std::string name = "kt");
/// Laplace: (n_x + 1) / (n + |X|).
ExpertPtr laplace_estimator(std::size_t alphabet_size,
                            std::string name = "laplace");
/// First-order Markov source with a fixed initial distribution.
ExpertPtr markov_source(Distribution initial, std::vector<Distribution> rows,
                        std::string name = "markov");

/// Externally supplied advice: row i is the prediction for outcome i+1.
ExpertPtr tabulated_expert(std::vector<Distribution> rows, std::string name);

/// Advice that only records the probability given to the realized outcome.
/// Queries for any other outcome are contract errors.
ExpertPtr realized_advice_expert(std::vector<LogMass> realized,
                                 std::vector<Symbol> data,
                                 std::size_t alphabet_size, std::string name);

}  // namespace esp
