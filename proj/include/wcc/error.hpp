#pragma once

#include <stdexcept>
#include <string>

namespace wcc {

// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: config keys, file formats, invalid arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Numerical failure: non-finite values, solver divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

// The noise distribution does not cover the data distribution at some cell.
class CoverageError : public Error {
 public:
  CoverageError(int x, int y)
      : Error("noise distribution does not cover data at cell (" + std::to_string(x) + ", " +
              std::to_string(y) + ")"),
        x_(x),
        y_(y) {}

  int x() const { return x_; }
  int y() const { return y_; }

 private:
  int x_;
  int y_;
};

}  // namespace wcc
