#pragma once

#include <stdexcept>
#include <string>

namespace ep3d {

// Base of every error the engine raises. Stage failures are rethrown by the
// flow with the stage name prefixed to what().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidRegion : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class InfeasibleTransform : public Error {
 public:
  InfeasibleTransform(const std::string& macro, double required_whitespace)
      : Error("macro '" + macro + "' does not fit in one tier; requires whitespace >= " +
              std::to_string(required_whitespace)),
        macro_(macro),
        required_whitespace_(required_whitespace) {}
  const std::string& macro() const { return macro_; }
  double required_whitespace() const { return required_whitespace_; }

 private:
  std::string macro_;
  double required_whitespace_;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class LegalizationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace ep3d
