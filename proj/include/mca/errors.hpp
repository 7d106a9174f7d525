#pragma once

#include <stdexcept>
#include <string>

namespace mca {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// trajectory
class ParseError : public Error {
 public:
  using Error::Error;
};
class NonUniformSampling : public Error {
 public:
  using Error::Error;
};
class UnknownKind : public Error {
 public:
  using Error::Error;
};

// platform
class InvalidHome : public Error {
 public:
  using Error::Error;
};

// policy
class LayoutMismatch : public Error {
 public:
  using Error::Error;
};
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};
class VersionMismatch : public Error {
 public:
  using Error::Error;
};
class CorruptFile : public Error {
 public:
  using Error::Error;
};

// metrics
class EmptyInput : public Error {
 public:
  using Error::Error;
};
class ZeroVariance : public Error {
 public:
  using Error::Error;
};
class AllZeroDifferences : public Error {
 public:
  using Error::Error;
};

// streaming
class ProtocolError : public Error {
 public:
  ProtocolError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mca
