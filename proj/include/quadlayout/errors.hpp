#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quadlayout {

/// Base class for every error raised by the library. The CLI maps
/// IoError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DegenerateCenter : public Error {
 public:
  using Error::Error;
};

class DegenerateNormal : public Error {
 public:
  using Error::Error;
};

class BadK : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class MatchError : public Error {
 public:
  using Error::Error;
};

class TooFewQuads : public Error {
 public:
  using Error::Error;
};

class SceneMismatch : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line` is 1-based; `offset` is the 0-based byte
/// offset of the start of that line in the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset)
      : Error(what + " (line " + std::to_string(line) + ", offset " +
              std::to_string(offset) + ")"),
        line_(line),
        offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

/// Well-formed input that violates the schema; `field()` names the
/// offending key (e.g. "size").
class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error("schema error in '" + field + "': " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace quadlayout
