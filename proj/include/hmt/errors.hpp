#pragma once

#include <stdexcept>
#include <string>

namespace hmt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A value became NaN or infinite.
class NumericError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class AnnotationError : public Error {
 public:
  using Error::Error;
};

/// Two triples claim the same token in the JE tag sequence.
class OverlapError : public AnnotationError {
 public:
  OverlapError(std::size_t token, const std::string& what)
      : AnnotationError(what), token_(token) {}
  std::size_t token() const { return token_; }

 private:
  std::size_t token_;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace hmt
