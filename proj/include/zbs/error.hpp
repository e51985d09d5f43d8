#ifndef ZBS_ERROR_HPP
#define ZBS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace zbs {

// Base of every error thrown by the library. The CLI maps InputError to exit
// code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, bad arguments, violated preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

// A file could not be read or parsed.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : InputError(format(what, line, column)), line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    std::string s = what;
    if (line > 0) s += " (line " + std::to_string(line);
    if (line > 0 && column > 0) s += ", column " + std::to_string(column);
    if (line > 0) s += ")";
    return s;
  }
  int line_;
  int column_;
};

// The number of observations does not exceed the dimension of the spline
// space, so the smoothing problem is not posed.
class SmoothingConditionError : public Error {
 public:
  using Error::Error;
};

// A collocation or system matrix lacks full rank.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, std::string axis)
      : Error(what), axis_(std::move(axis)) {}
  const std::string& axis() const { return axis_; }

 private:
  std::string axis_;
};

// Accept-reject envelope constant is smaller than the target density.
class EnvelopeError : public Error {
 public:
  using Error::Error;
};

}  // namespace zbs

#endif  // ZBS_ERROR_HPP
