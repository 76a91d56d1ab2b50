#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvdelay {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Division by a vanishing conditioning variance and similar singular states.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// QNL reference unusable (missing, silent, mismatched).
class CalibrationError : public Error {
 public:
  using Error::Error;
};

// Cross-correlation peak does not clear the significance threshold.
class NoCorrelationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string source, std::size_t line, const std::string& what);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cvdelay
