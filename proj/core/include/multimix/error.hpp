#pragma once

#include <stdexcept>
#include <string>

namespace multimix {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Out-of-domain scalar argument (negative alpha, lambda outside [0,1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Incompatible matrix or batch dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss, exhausted retries, or other numeric breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A metric that is not defined for the given input (no same-class pair,
/// single-class OOD scores, ...).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Loss weights with non-positive total mass.
class DegenerateWeightError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset file. The message carries the offending line number.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed configuration file or unknown key.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& what)
      : Error((line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) + what),
        key_(std::move(key)),
        line_(line) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string key_;
  std::size_t line_;
};

}  // namespace multimix
