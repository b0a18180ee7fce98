#pragma once

#include <stdexcept>
#include <string>

namespace paneitz {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain (n < 5, non-unit vectors, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Evaluation at a chart pole or another removable-but-unhandled point.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NotImplementedError : public Error {
 public:
  using Error::Error;
};

// Two independent computations of the same quantity disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace paneitz
