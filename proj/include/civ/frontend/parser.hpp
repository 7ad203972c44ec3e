#pragma once

#include "civ/frontend/ast.hpp"
#include "civ/frontend/lexer.hpp"

#include <string>

namespace civ::frontend {

/// Parses one MiniKer file. Fails fast with ParseError on the first
/// syntax error.
TranslationUnit parse(const SourceFile& file);

/// Source text equivalent to `unit`. Every compound subexpression is
/// parenthesized, so parse(print(u)) is structurally equal to u.
std::string print(const TranslationUnit& unit);

/// Position-free structural dump, used to compare ASTs.
std::string dump_structure(const TranslationUnit& unit);

} // namespace civ::frontend
