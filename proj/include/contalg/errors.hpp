#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contalg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not match the owning model.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// A function evaluated outside its real-analytic domain (log of a
/// non-positive number, division by zero, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " (at byte " + std::to_string(offset) + ")"), message_(message), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  /// The message without the offset suffix.
  const std::string& message() const noexcept { return message_; }

private:
  std::string message_;
  std::size_t offset_;
};

/// The fiber Hessian of a Lagrangian is singular or badly conditioned.
class RegularityError : public Error {
public:
  RegularityError(const std::string& message, double det)
      : Error(message + " (det W = " + std::to_string(det) + ")"), det_(det) {}

  double det() const noexcept { return det_; }

private:
  double det_;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// Anchor/structure data that violate the structure equations.
class StructureError : public Error {
public:
  using Error::Error;
};

/// Invalid scenario configuration; the message starts with the JSON field path.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace contalg
