#pragma once

#include <stdexcept>
#include <string>

namespace qnmf {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A normal-equation matrix could not be factorized (rank deficient or
/// numerically singular).
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input factors or data violate the cone / non-negativity constraints.
class InfeasibleInput : public Error {
 public:
  using Error::Error;
};

/// Configuration problem, reported with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)), message_(what) {}
  const std::string& field() const noexcept { return field_; }
  /// The problem without the field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

/// File parse problem, reported with a 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::string path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
  std::size_t line_;
};

}  // namespace qnmf
