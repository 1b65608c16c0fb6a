#pragma once

#include <stdexcept>
#include <string>

namespace litt {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, geometry or input files.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Dimension mismatches and other violated preconditions.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A linear solve did not reach its tolerance or broke down.
class SolverError : public Error {
public:
  using Error::Error;
};

/// The Armijo search exhausted its trial budget.
class LineSearchError : public Error {
public:
  LineSearchError(const std::string& what, int trials, double last_step,
                  double cost, double last_trial_cost)
      : Error(what), trials(trials), last_step(last_step), cost(cost),
        last_trial_cost(last_trial_cost) {}

  int trials;
  double last_step;
  double cost;
  double last_trial_cost;
};

}  // namespace litt
