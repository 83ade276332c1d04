#pragma once

#include <stdexcept>
#include <string>

namespace gaffect {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kInvalidInput,
  kDegenerateGeometry,
  kEmptyInput,
  kParse,
  kNoUsablePredictor,
  kUnclassifiableRecord,
  kModel,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& what) : Error(ErrorKind::kInvalidInput, what) {}
};

// All landmarks coincide, so there is no scale to normalize by.
class DegenerateGeometryError : public Error {
 public:
  explicit DegenerateGeometryError(const std::string& what)
      : Error(ErrorKind::kDegenerateGeometry, what) {}
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what) : Error(ErrorKind::kEmptyInput, what) {}
};

/// Malformed file content. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  enum class Reason { kSyntax, kDimensionMismatch, kNonNumeric, kDuplicateHeader, kMissingHeader };

  ParseError(Reason reason, std::string file, std::size_t line, const std::string& what)
      : Error(ErrorKind::kParse, file + ":" + std::to_string(line) + ": " + what),
        reason_(reason),
        file_(std::move(file)),
        line_(line) {}

  Reason reason() const noexcept { return reason_; }
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Reason reason_;
  std::string file_;
  std::size_t line_;
};

class NoUsablePredictorError : public Error {
 public:
  explicit NoUsablePredictorError(const std::string& what)
      : Error(ErrorKind::kNoUsablePredictor, what) {}
};

class UnclassifiableRecordError : public Error {
 public:
  explicit UnclassifiableRecordError(const std::string& what)
      : Error(ErrorKind::kUnclassifiableRecord, what) {}
};

/// Missing, corrupt or incompatible model artifacts.
class ModelError : public Error {
 public:
  explicit ModelError(const std::string& what) : Error(ErrorKind::kModel, what) {}
};

}  // namespace gaffect
