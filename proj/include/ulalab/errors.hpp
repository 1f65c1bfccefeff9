#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ula {

// Caller passed a malformed argument (dimension mismatch, bad range, ...).
class InvalidArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A config file or declared metadata is missing something required.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string field = "")
      : std::runtime_error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// The requested operation needs a capability the object does not provide.
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A chain produced a non-finite state or left the guard radius.
class DivergedChainError : public std::runtime_error {
 public:
  DivergedChainError(std::size_t step, const std::string& what)
      : std::runtime_error(what + " at step " + std::to_string(step)),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// Reference-density bounds leave too much tail mass outside the grid.
class EnlargeBoundsError : public std::runtime_error {
 public:
  EnlargeBoundsError(double tail_fraction, std::vector<double> suggested)
      : std::runtime_error("tail mass outside bounds is " +
                           std::to_string(tail_fraction) +
                           "; enlarge the grid"),
        tail_fraction_(tail_fraction),
        suggested_bounds_(std::move(suggested)) {}
  double tail_fraction() const { return tail_fraction_; }
  const std::vector<double>& suggested_bounds() const { return suggested_bounds_; }

 private:
  double tail_fraction_;
  std::vector<double> suggested_bounds_;
};

// Too few samples for the requested estimator.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ula
