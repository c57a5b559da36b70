#pragma once

#include <stdexcept>
#include <string>

namespace vageo {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes (validation-type errors -> 2, everything else -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

#define VAGEO_CHECK(cond, ErrorType, msg) \
  do {                                    \
    if (!(cond)) throw ErrorType(msg);    \
  } while (0)

}  // namespace vageo
