// SPDX-License-Identifier: Apache-2.0

#ifndef GRIDMEND_ERROR_HPP_
#define GRIDMEND_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gridmend {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A document could not be parsed. `where` names the line or field.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, const std::string& what)
      : Error(where + ": " + what), where_(where) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

/// A parsed document violates a model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Run configuration is inconsistent or references missing files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NoRouteError : public Error {
 public:
  NoRouteError(int from, int to)
      : Error("no route from transport node " + std::to_string(from) +
              " to node " + std::to_string(to)),
        from_(from),
        to_(to) {}
  int from() const noexcept { return from_; }
  int to() const noexcept { return to_; }

 private:
  int from_;
  int to_;
};

/// Training diverged (NaN/Inf in a loss or parameter).
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridmend

#endif  // GRIDMEND_ERROR_HPP_
