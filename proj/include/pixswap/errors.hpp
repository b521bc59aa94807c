#pragma once

#include <stdexcept>
#include <string>

namespace pixswap {

// Error families map onto CLI exit codes: UsageError -> 1, DataError family -> 2,
// everything else (RuntimeFailure family) -> 3.

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: unreadable files, malformed manifests, invalid labels.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class ProtocolError : public DataError {
 public:
  using DataError::DataError;
};

/// Failures raised while computing: shape checks, consistency checks, training.
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ArgumentError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ShapeError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ConsistencyError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ConfigError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class BatchCompositionError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class EvaluationError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class TrainingError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace pixswap
