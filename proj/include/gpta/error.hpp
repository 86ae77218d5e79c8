#pragma once

#include <stdexcept>
#include <string>

namespace gpta {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized input (JSON, JSONL).
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Operation not permitted in the current object state (e.g. frozen student).
class StateError : public Error {
 public:
  using Error::Error;
};

// The TA produced output that could not be interpreted.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Network-level failure after all retries were exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

class FinetuneError : public Error {
 public:
  FinetuneError(const std::string& status, const std::string& what)
      : Error(what), status_(status) {}
  const std::string& status() const noexcept { return status_; }

 private:
  std::string status_;
};

// History collection made no progress for too many consecutive rounds.
class StallError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gpta
