#pragma once

#include <stdexcept>
#include <string>

namespace myotrack {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad sizes, out-of-range parameters, malformed configuration.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A non-finite value appeared in the simulated state.
class SimulationDiverged : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace myotrack
