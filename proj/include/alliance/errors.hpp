#pragma once

#include <stdexcept>
#include <string>

namespace alliance {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A document violated its schema (missing, duplicate, or malformed element).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A numeric input fell outside its documented domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Rating-matrix degeneracy: no usable between-target variance.
class DegenerateMatrix : public Error {
 public:
  using Error::Error;
};

// Raised by statistics kernels on constant input where variance is required.
class ZeroVariance : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

// A model response could not be turned into a rating; retried with a fresh
// call rather than repaired.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model output did not contain a usable score marker.
class NoScoreFound : public ParseError {
 public:
  using ParseError::ParseError;
};

// Model output carried a score outside the 1..5 scale.
class ScoreOutOfRange : public ParseError {
 public:
  using ParseError::ParseError;
};

// Backend call failed at the transport level (after retries).
class TransportError : public Error {
 public:
  using Error::Error;
};

// All parse retries for a job were exhausted; carries the last raw response.
class ParseExhausted : public Error {
 public:
  ParseExhausted(const std::string& what, std::string last_response)
      : Error(what), last_response_(std::move(last_response)) {}

  const std::string& last_response() const { return last_response_; }

 private:
  std::string last_response_;
};

}  // namespace alliance
