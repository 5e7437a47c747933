#pragma once

#include <stdexcept>
#include <string>

namespace mgnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// malformed input file; carries a 1-based line number when known
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t line = 0)
      : Error(line ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_number(line) {}
  std::size_t line_number;
};

struct IoError : Error {
  using Error::Error;
};

// invalid configuration or precondition violation at setup time
struct ConfigError : Error {
  using Error::Error;
};

// tensor shape or dimension mismatch
struct ShapeError : Error {
  using Error::Error;
};

// API misuse (non-scalar loss, missing gradient, ...)
struct ContractError : Error {
  using Error::Error;
};

// NaN/Inf produced by a numeric op
struct NumericError : Error {
  using Error::Error;
};

// id outside the valid node range
struct BoundsError : Error {
  using Error::Error;
};

// character outside the k-mer alphabet
struct EncodingError : Error {
  using Error::Error;
};

// pipeline stage invoked before its upstream stage
struct MissingDependencyError : Error {
  MissingDependencyError(const std::string& msg, std::string stage)
      : Error(msg), required_stage(std::move(stage)) {}
  std::string required_stage;
};

}  // namespace mgnet
