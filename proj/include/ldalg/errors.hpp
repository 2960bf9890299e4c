#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ldalg {

// Input that cannot be accepted as written (malformed spec, bad expression text).
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& what, std::string location = {})
      : std::runtime_error(location.empty() ? what : location + ": " + what),
        location_(std::move(location)) {}
  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

// Expression text error; offset is the byte position in the parsed string.
class ParseError : public SpecError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : SpecError(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifier : public ParseError {
 public:
  UnknownIdentifier(const std::string& name, std::size_t offset)
      : ParseError("unknown identifier '" + name + "'", offset), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// Numeric failure: domain errors, degenerate metrics, non-finite states.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegeneracyError : public NumericError {
 public:
  using NumericError::NumericError;
};

class MissingCoordinate : public std::invalid_argument {
 public:
  explicit MissingCoordinate(const std::string& name)
      : std::invalid_argument("point does not cover coordinate '" + name + "'") {}
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ldalg
