#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trajkit {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input carrying invalid values (NaN coordinates, duplicates).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Caller violated a precondition (shape mismatch, too few samples).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A mixture fit could not be produced (fewer points than components).
class FitError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Training hit a non-finite loss or gradient.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace trajkit
