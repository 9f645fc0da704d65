#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evmotion {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based; 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class EventBoundsError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EventOrderError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class GeometryMismatch : public Error {
 public:
  using Error::Error;
};

/// Not enough events, valid pixels, or overlap to compute a result.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace evmotion
