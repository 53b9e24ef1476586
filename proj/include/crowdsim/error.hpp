#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace crowdsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDirection : public Error {
 public:
  using Error::Error;
};

class EmptyBounds : public Error {
 public:
  using Error::Error;
};

/// A scenario document that is not well-formed JSON.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A well-formed scenario that violates an invariant. `field()` names the
/// offending key path, e.g. "agents[3].radius".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class NoPath : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class OccupiedEndpoint : public Error {
 public:
  using Error::Error;
};

class UnknownRobot : public Error {
 public:
  using Error::Error;
};

class NotARobot : public Error {
 public:
  using Error::Error;
};

class PlacementFailure : public Error {
 public:
  using Error::Error;
};

/// A wire message that cannot be decoded. `code()` is the protocol error
/// code sent back to the peer.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string code, const std::string& message) : Error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace crowdsim
