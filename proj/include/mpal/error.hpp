#pragma once

#include <stdexcept>
#include <string>

namespace mpal {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
  using Error::Error;
};

/// Index or cardinality does not fit the platform index type.
struct SizeLimit : Error {
  using Error::Error;
};

struct EmptyBoundary : Error {
  using Error::Error;
};

/// Field sample does not cover the sites an operator needs.
struct CoverageError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct SolverError : Error {
  SolverError(const std::string& what, int iterations)
      : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
        iterations(iterations) {}
  int iterations;
};

/// Energy lies (numerically) in the spectrum; the resolvent does not exist.
struct SingularResolvent : Error {
  using Error::Error;
};

}  // namespace mpal
