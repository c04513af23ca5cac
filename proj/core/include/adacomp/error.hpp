#pragma once

#include <stdexcept>
#include <string>

namespace adacomp {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or invalid input data (JSONL records, config files).
class DataError : public Error {
 public:
  using Error::Error;
};

// Argument outside the permitted domain (k > N, bad policy, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by generator and predictor clients. Annotation treats any
// GeneratorError as a per-example failure.
class GeneratorError : public Error {
 public:
  using Error::Error;
};

// Connection refused, timeout, or retries exhausted.
class TransportError : public GeneratorError {
 public:
  using GeneratorError::GeneratorError;
};

// Remote answered with a non-2xx status or a malformed body.
class ProtocolError : public GeneratorError {
 public:
  ProtocolError(int status, const std::string& what)
      : GeneratorError(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

// Feature layout of a model does not match the extractor.
class IncompatibleModelError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace adacomp
