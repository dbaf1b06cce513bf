#pragma once

#include <stdexcept>
#include <string>

namespace tsgcl {

// Base for every error the library raises. The CLI maps the subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf appeared; `op` names the operation that produced it.
class NumericError : public Error {
 public:
  NumericError(std::string op, const std::string& detail)
      : Error("numeric failure in " + op + ": " + detail), op_(std::move(op)) {}

  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

// A value outside an operation's domain (asymmetric adjacency, bad
// hyperparameter, unknown label).
class ValueError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
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

}  // namespace tsgcl
