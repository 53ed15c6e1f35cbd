#pragma once

#include <stdexcept>
#include <string>

namespace saddopt {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration or input file. Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure exhausted its budget before reaching tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A run produced a non-finite iterate. Maps to CLI exit code 3.
class RunAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace saddopt
