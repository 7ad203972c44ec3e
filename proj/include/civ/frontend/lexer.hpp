#pragma once

#include "civ/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace civ::frontend {

enum class TokenKind
{
  Keyword,
  Identifier,
  IntLiteral,
  CharLiteral,
  StringLiteral,
  Punct,
  /// `/*@selector(field)*/`; text holds the field name.
  SelectorPragma,
};

struct Token
{
  TokenKind kind;
  std::string text;
  std::int64_t value = 0;
  SourcePos pos;
};

enum class Compartment
{
  Kernel,
  Driver,
  External,
};

std::string to_string(Compartment c);

struct SourceFile
{
  std::string path;
  std::string text;
  std::optional<Compartment> compartment_hint;
};

/// Reads a file from disk; throws IoError.
SourceFile read_source_file(const std::string& path);

bool is_keyword(const std::string& word);

/// Splits MiniKer text into tokens. Comments and whitespace are dropped,
/// except selector pragmas which surface as their own token.
std::vector<Token> tokenize(const SourceFile& file);

} // namespace civ::frontend
