#pragma once

#include <stdexcept>
#include <string>

namespace maxslope {

// Root of every error raised by the library. Infinite energies are values, not
// errors; only contract violations and solver breakdowns throw.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyIntersection : public Error {
 public:
  using Error::Error;
};

class UndefinedSlope : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class NonFiniteObjective : public SolverFailure {
 public:
  using SolverFailure::SolverFailure;
};

class Divergence : public Error {
 public:
  using Error::Error;
};

class InfeasibleMatching : public Error {
 public:
  using Error::Error;
};

class InfiniteEnergy : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace maxslope
