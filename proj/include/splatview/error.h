#pragma once

#include <stdexcept>
#include <string>

namespace splatview {

// Broad failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  kFormat,
  kValidation,
  kIntegrity,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed file contents: bad headers, wrong token counts, truncation.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error(ErrorKind::kFormat, message) {}
};

class UnsupportedModelError : public FormatError {
 public:
  using FormatError::FormatError;
};

class DegreeInferenceError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Values that parse fine but violate a domain invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorKind::kValidation, message) {}
};

class DegenerateUpError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Cross-record consistency: dangling ids, name collisions, missing files.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& message)
      : Error(ErrorKind::kIntegrity, message) {}
};

class CollisionError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

class EmptyComparisonError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::kIo, message) {}
};

}  // namespace splatview
