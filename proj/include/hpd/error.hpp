#pragma once

#include <stdexcept>
#include <string>

namespace hpd {

// Every failure surfaced by the toolkit maps onto one of these kinds; the CLI
// turns the kind into its exit code.
enum class ErrorKind {
  Config = 2,
  Data = 3,
  Remote = 4,
  Invariant = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Short machine-readable tag, e.g. "schema" or "fit".
  const std::string& code() const noexcept { return code_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
  std::string code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::Config, "config", message) {}
};

class DataError : public Error {
 public:
  DataError(std::string code, const std::string& message)
      : Error(ErrorKind::Data, std::move(code), message) {}
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(const std::string& message)
      : DataError("schema", message) {}
};

class FitError : public DataError {
 public:
  explicit FitError(const std::string& message) : DataError("fit", message) {}
};

class ModelFormatError : public DataError {
 public:
  ModelFormatError(std::string code, const std::string& message)
      : DataError(std::move(code), message) {}
};

// Network failures, timeouts and malformed responses from remote services.
class RemoteError : public Error {
 public:
  RemoteError(std::string code, const std::string& message,
              bool retryable = false)
      : Error(ErrorKind::Remote, std::move(code), message),
        retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& message)
      : Error(ErrorKind::Invariant, "invariant", message) {}
};

}  // namespace hpd
