#pragma once

#include <stdexcept>
#include <string>

namespace qem {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// -- numeric kernel ---------------------------------------------------------

class NotHermitianError : public Error {
public:
  using Error::Error;
};

class InvalidStateError : public Error {
public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
public:
  using Error::Error;
};

class NotCPError : public Error {
public:
  using Error::Error;
};

class OutOfBallError : public Error {
public:
  using Error::Error;
};

// -- Ising ------------------------------------------------------------------

class InvalidParamsError : public Error {
public:
  using Error::Error;
};

class TooLargeError : public Error {
public:
  using Error::Error;
};

class DegenerateError : public Error {
public:
  using Error::Error;
};

class NoConvergenceError : public Error {
public:
  using Error::Error;
};

class NotAchievableError : public Error {
public:
  using Error::Error;
};

// -- circuit ----------------------------------------------------------------

class DegenerateStatesError : public Error {
public:
  using Error::Error;
};

class NoDecompositionError : public Error {
public:
  using Error::Error;
};

// -- tomography -------------------------------------------------------------

class IncompleteDataError : public Error {
public:
  using Error::Error;
};

class IllConditionedError : public Error {
public:
  using Error::Error;
};

// -- pipeline ---------------------------------------------------------------

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace qem
