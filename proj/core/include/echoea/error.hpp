#pragma once

#include <stdexcept>
#include <string>

namespace echoea {

/// Failure category. The CLI maps each category to its own exit code.
enum class ErrorCategory {
  kArgument = 2,
  kValidation = 3,
  kIo = 4,
  kParse = 5,
  kIntegrity = 6,
  kNumeric = 7,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& message)
      : Error(ErrorCategory::kArgument, message) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCategory::kValidation, message) {}
};

/// Missing or unreadable file; the message names the file.
class LoadError : public Error {
 public:
  explicit LoadError(const std::string& message)
      : Error(ErrorCategory::kIo, message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(ErrorCategory::kParse,
              file + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A triple or pair references an id that does not exist.
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& message)
      : Error(ErrorCategory::kIntegrity, message) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message)
      : Error(ErrorCategory::kNumeric, message) {}
};

}  // namespace echoea
