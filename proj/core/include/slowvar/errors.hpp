#pragma once

#include <stdexcept>
#include <string>

namespace slowvar {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A state, parameter or index outside its admissible range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or malformed input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-convergence, disconnected graphs, reducible generators and similar.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Every propensity vanished, so the chain cannot move.
class AbsorbingStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A pipeline stage needs an artifact that an earlier stage has not written.
class MissingPrerequisite : public Error {
 public:
  using Error::Error;
};

}  // namespace slowvar
