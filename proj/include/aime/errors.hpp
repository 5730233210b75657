#pragma once

#include <stdexcept>
#include <string>

namespace aime {

/// Base of every error the library throws. `numerical()` separates
/// numerical failures (exit code 3 in the CLI) from bad input (exit code 2).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual bool numerical() const noexcept { return false; }
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class IndexError : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class AlignmentError : public Error {
public:
  using Error::Error;
};

class CacheError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

class DefinitenessError : public Error {
public:
  DefinitenessError(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  bool numerical() const noexcept override { return true; }
  std::size_t pivot() const noexcept { return pivot_; }

private:
  std::size_t pivot_;
};

class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  bool numerical() const noexcept override { return true; }
  double residual() const noexcept { return residual_; }

private:
  double residual_;
};

/// Non-finite loss or parameters during training.
class NumericalError : public Error {
public:
  using Error::Error;
  bool numerical() const noexcept override { return true; }
};

}  // namespace aime
