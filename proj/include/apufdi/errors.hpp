#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace apufdi {

/// Matrix or vector sizes that do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model that violates a structural or statistical assumption (PSD noise, nonzero F, ...).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Innovation covariance could not be factored, or is too badly conditioned to trust.
class SingularInnovationError : public std::runtime_error {
 public:
  SingularInnovationError(const std::string& what, double condition_number)
      : std::runtime_error(what), condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

/// Wraps a failure raised while processing one step of a filter or simulation.
class StepError : public std::runtime_error {
 public:
  StepError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class DivergenceError : public StepError {
 public:
  using StepError::StepError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// More runs of a Monte Carlo case failed than the configured budget allows.
class FailureBudgetError : public std::runtime_error {
 public:
  FailureBudgetError(std::size_t failed, std::size_t total)
      : std::runtime_error(std::to_string(failed) + " of " + std::to_string(total) +
                           " runs failed"),
        failed_(failed),
        total_(total) {}
  std::size_t failed() const noexcept { return failed_; }
  std::size_t total() const noexcept { return total_; }

 private:
  std::size_t failed_;
  std::size_t total_;
};

/// A theorem check was asked to run outside the hypotheses of the theorem.
class HypothesisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace apufdi
