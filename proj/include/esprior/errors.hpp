#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace esp {

/// Malformed user input: bad parameters, unknown symbols, unparsable files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller broke a documented precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Requested model/operation combination is not available.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The data received probability zero; `step` is the 1-based outcome index.
class ZeroMarginalError : public std::runtime_error {
 public:
  explicit ZeroMarginalError(std::size_t step)
      : std::runtime_error("marginal probability is zero at step " +
                           std::to_string(step)),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// A model's per-level state count exceeded its configured budget.
class StateBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace esp
