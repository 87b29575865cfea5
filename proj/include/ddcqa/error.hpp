#pragma once

#include <stdexcept>
#include <string>

namespace ddcqa {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Singular systems, indefinite matrices where PSD is required, and similar.
class NumericError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, int iterations, double mismatch)
      : Error(what), iterations_(iterations), mismatch_(mismatch) {}
  int iterations() const noexcept { return iterations_; }
  double mismatch() const noexcept { return mismatch_; }

private:
  int iterations_;
  double mismatch_;
};

}  // namespace ddcqa
