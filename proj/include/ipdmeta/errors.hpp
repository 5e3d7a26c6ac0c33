#pragma once

#include <stdexcept>
#include <string>

namespace ipdmeta {

// Bad input: schema violations, domain errors, inconsistent model specs.
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: rank-deficient designs, degenerate inference.
// The CLI maps these to exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-fatal event surfaced to reports: dropped rows, excluded trials,
// absorbed design columns. `code` is machine-readable, `message` is for
// humans.
struct Warning {
  std::string code;
  std::string message;
};

}  // namespace ipdmeta
