#pragma once

#include <stdexcept>
#include <string>

namespace lc {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not agree (matmul inner dims, reshape counts, ...).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite input or a numerical routine that failed to converge.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A caller-supplied argument is outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// The L step produced a non-finite loss.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, int epoch)
      : NumericError(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind {
  kBadMagic,
  kTruncated,
  kCountMismatch,
  kBadVersion,
  kMalformed,
};

// Binary or text input does not follow its format.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

}  // namespace lc
