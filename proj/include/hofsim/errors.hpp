#pragma once

#include <stdexcept>
#include <string>

namespace hofsim {

/// Rejected input: malformed shapes, non-finite values, out-of-range parameters.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedOrder : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Periodic boundary requested with a total phase that does not close on the torus.
class FluxQuantizationError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class InconsistentFrequencies : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Step-size underflow in the adaptive integrator.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time)
      : std::runtime_error(what + " (t = " + std::to_string(time) + " s)"), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Bad configuration key or value; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hofsim
