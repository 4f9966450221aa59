#pragma once

#include <stdexcept>
#include <string>

namespace roledyn {

/// Coarse error families. Each maps onto a stable CLI exit code.
enum class ErrorKind {
  Argument,    // caller violated a precondition
  Io,          // unreadable or unwritable file
  Parse,       // malformed input text
  Schema,      // column/definition mismatch between artifacts
  Definition,  // unknown feature definition
  Lookup,      // unknown node or key
  InsufficientData,
  Numerical,   // NaN/Inf or non-convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define ROLEDYN_DECLARE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                              \
   public:                                                                 \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  }

ROLEDYN_DECLARE_ERROR(ArgumentError, Argument);
ROLEDYN_DECLARE_ERROR(IoError, Io);
ROLEDYN_DECLARE_ERROR(SchemaError, Schema);
ROLEDYN_DECLARE_ERROR(DefinitionError, Definition);
ROLEDYN_DECLARE_ERROR(LookupError, Lookup);
ROLEDYN_DECLARE_ERROR(InsufficientDataError, InsufficientData);
ROLEDYN_DECLARE_ERROR(NumericalError, Numerical);

#undef ROLEDYN_DECLARE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// CLI exit code contract: 0 success, 1 usage, 2 data, 3 numerical.
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace roledyn
