#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vhj {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent inputs detected before any computation starts.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

/// Parameters outside the admissible range of an operation.
class RejectionError : public Error {
public:
  using Error::Error;
};

/// A growth envelope that is not increasing on the sampled radii.
class EnvelopeError : public Error {
public:
  using Error::Error;
};

/// The time stepper produced a non-finite value.
class BlowUpError : public Error {
public:
  BlowUpError(const std::string &what, std::size_t node, double time)
      : Error(what), node_(node), time_(time) {}
  std::size_t node() const { return node_; }
  double time() const { return time_; }

private:
  std::size_t node_;
  double time_;
};

/// An iterative solver did not reach its tolerance.
class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string &what,
                      std::vector<std::pair<double, double>> series = {})
      : Error(what), series_(std::move(series)) {}
  /// Diagnostic history (slope series or residual history).
  const std::vector<std::pair<double, double>> &series() const { return series_; }

private:
  std::vector<std::pair<double, double>> series_;
};

/// An ODE integration that could not proceed (step underflow).
class IntegrationError : public Error {
public:
  using Error::Error;
};

} // namespace vhj
