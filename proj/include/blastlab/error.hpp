#pragma once

#include <stdexcept>
#include <string>

namespace blastlab {

// Base for all recoverable errors raised by the library. The CLI maps
// DataError subclasses to exit code 3 and everything else to 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data is malformed or violates a schema/validation rule.
class DataError : public Error {
 public:
  using Error::Error;
};

// A caller broke an API precondition (agent/mask bug and similar).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InvalidAction : public ContractError {
 public:
  using ContractError::ContractError;
};

class Unresolvable : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(int line, const std::string& reason)
      : DataError("line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public DataError {
 public:
  explicit ValidationError(const std::string& rule)
      : DataError("validation failed: " + rule), rule_(rule) {}
  const std::string& rule() const { return rule_; }

 private:
  std::string rule_;
};

class GenerationFailure : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ContractError {
 public:
  using ContractError::ContractError;
};

class DegenerateInput : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientData : public DataError {
 public:
  using DataError::DataError;
};

class NaNLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace blastlab
