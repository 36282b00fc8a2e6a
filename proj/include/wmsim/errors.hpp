#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wmsim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed trace input. Carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Submit times went backwards in a trace that must be submit-ordered.
class OrderError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Invalid system/generator/plan configuration. `path` is a JSON-pointer-like
/// field path, e.g. "resources.g1".
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A dispatcher asked for more than a node has free.
class OversubscriptionError : public Error {
 public:
  using Error::Error;
};

/// Releasing resources that were never allocated.
class AccountingError : public Error {
 public:
  using Error::Error;
};

/// A dispatcher returned a decision that violates its contract (unknown or
/// repeated job, malformed allocation).
class DispatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wmsim
