#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace facets {

/// Argument outside the documented domain of an operation.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Model parameters that do not define a valid process (exit code 2 in the CLI).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Enumeration or integration request above a hard size guard.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection sampler gave up (exit code 3 in the CLI).
class AcceptanceStarvation : public std::runtime_error {
 public:
  AcceptanceStarvation(std::size_t attempts, double acceptance_rate)
      : std::runtime_error(
            "rejection sampler exhausted " + std::to_string(attempts) +
            " attempts (mean acceptance probability " +
            std::to_string(acceptance_rate) + "); use method \"mcmc\""),
        attempts_(attempts),
        acceptance_rate_(acceptance_rate) {}

  std::size_t attempts() const noexcept { return attempts_; }
  double acceptance_rate() const noexcept { return acceptance_rate_; }

 private:
  std::size_t attempts_;
  double acceptance_rate_;
};

/// Importance-weighted ratio estimate whose denominator collapsed onto a few draws.
class DegenerateEstimate : public std::runtime_error {
 public:
  DegenerateEstimate(double log_numerator, double log_denominator,
                     double effective_sample_size)
      : std::runtime_error(
            "degenerate denominator: log E[num]=" +
            std::to_string(log_numerator) +
            ", log E[den]=" + std::to_string(log_denominator) +
            ", effective sample size " + std::to_string(effective_sample_size)),
        log_numerator_(log_numerator),
        log_denominator_(log_denominator),
        ess_(effective_sample_size) {}

  double log_numerator() const noexcept { return log_numerator_; }
  double log_denominator() const noexcept { return log_denominator_; }
  double effective_sample_size() const noexcept { return ess_; }

 private:
  double log_numerator_;
  double log_denominator_;
  double ess_;
};

}  // namespace facets
