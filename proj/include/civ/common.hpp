#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace civ {

inline constexpr const char* kToolVersion = "0.1.0";

struct SourcePos
{
  std::string file;
  int line = 0;
  int column = 0;
  std::size_t offset = 0;
};

struct SourceRange
{
  SourcePos begin;
  SourcePos end;
};

/// "file:line:column", the prefix of every diagnostic.
std::string format_pos(const SourcePos& pos);

/// Base of every error the analyzer reports to the user.
class Error : public std::runtime_error
{
public:
  Error(std::string kind, const std::string& message, SourcePos pos = {});

  const std::string& kind() const noexcept { return kind_; }
  const SourcePos& pos() const noexcept { return pos_; }
  const std::string& message() const noexcept { return message_; }

  /// Full diagnostic line: `file:line:col: kind: message`.
  std::string diagnostic() const;

private:
  std::string kind_;
  std::string message_;
  SourcePos pos_;
};

class LexError : public Error
{
public:
  explicit LexError(const std::string& message, SourcePos pos) : Error("LexError", message, std::move(pos)) {}
};

class ParseError : public Error
{
public:
  ParseError(const std::string& message, SourcePos pos, std::vector<std::string> expected = {})
    : Error("ParseError", message, std::move(pos)), expected_(std::move(expected))
  {
  }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
  std::vector<std::string> expected_;
};

class TypeError : public Error
{
public:
  TypeError(const std::string& message, SourcePos pos) : Error("TypeError", message, std::move(pos)) {}
};

class ConfigError : public Error
{
public:
  explicit ConfigError(const std::string& message, SourcePos pos = {}) : Error("ConfigError", message, std::move(pos)) {}
};

class UnknownCallee : public Error
{
public:
  UnknownCallee(const std::string& callee, SourcePos pos)
    : Error("UnknownCallee", "call target '" + callee + "' is neither defined nor declared in the boundary config", std::move(pos))
  {
  }
};

class ModeError : public Error
{
public:
  explicit ModeError(const std::string& message) : Error("ModeError", message) {}
};

class IoError : public Error
{
public:
  explicit IoError(const std::string& message, SourcePos pos = {}) : Error("IoError", message, std::move(pos)) {}
};

class CorpusMismatch : public Error
{
public:
  explicit CorpusMismatch(const std::string& message) : Error("CorpusMismatch", message) {}
};

/// Raised when an analyzer invariant breaks; always an analyzer bug.
class InternalError : public Error
{
public:
  explicit InternalError(const std::string& message) : Error("InternalError", message) {}
};

class MonotonicityViolation : public Error
{
public:
  explicit MonotonicityViolation(const std::string& message) : Error("MonotonicityViolation", message) {}
};

/// Non-fatal finding reported on the error stream.
struct Warning
{
  SourcePos pos;
  std::string message;
};

} // namespace civ
