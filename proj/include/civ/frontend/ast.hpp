#pragma once

#include "civ/common.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace civ::frontend {

struct Expr;
struct Stmt;
struct Param;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

/// One declarator operator. A declarator's ops are stored innermost first,
/// so `int *a[3]` is {Array(3), Pointer} and `int (*fp)(int)` is
/// {Pointer, Function(int)}.
struct DeclOp
{
  enum class Kind
  {
    Pointer,
    Array,
    Function,
  };
  Kind kind = Kind::Pointer;
  ExprPtr size;
  std::vector<Param> params;
};

struct TypeSyntax
{
  /// Base specifier words in source order, qualifiers dropped:
  /// {"unsigned", "long"}, {"struct", "dev"}, {"u32"}.
  std::vector<std::string> specifiers;
  std::vector<DeclOp> ops;
  SourcePos pos;
};

struct Param
{
  TypeSyntax type;
  std::string name;
  SourcePos pos;
};

enum class ExprKind
{
  IntLit,
  CharLit,
  StrLit,
  Ident,
  Unary,
  Postfix,
  Binary,
  Assign,
  Cond,
  Call,
  Index,
  Member,
  Cast,
  SizeofType,
  SizeofExpr,
};

struct Expr
{
  ExprKind kind = ExprKind::IntLit;
  SourceRange range;
  /// Operator spelling, identifier, member name or literal spelling.
  std::string text;
  std::int64_t value = 0;
  bool arrow = false;
  std::vector<ExprPtr> kids;
  std::unique_ptr<TypeSyntax> type;
};

enum class StmtKind
{
  Compound,
  Decl,
  Expr,
  If,
  While,
  For,
  Switch,
  Case,
  Default,
  Break,
  Continue,
  Return,
  Empty,
};

struct Stmt
{
  StmtKind kind = StmtKind::Empty;
  SourceRange range;
  std::vector<StmtPtr> items;
  StmtPtr init;
  StmtPtr then_branch;
  StmtPtr else_branch;
  StmtPtr body;
  ExprPtr cond;
  ExprPtr step;
  ExprPtr expr;
  std::optional<TypeSyntax> decl_type;
  std::string name;
  bool is_static = false;
};

struct FieldDecl
{
  TypeSyntax type;
  std::string name;
  SourcePos pos;
};

struct Enumerator
{
  std::string name;
  ExprPtr value;
  SourcePos pos;
};

enum class DeclKind
{
  Record,
  Enum,
  Typedef,
  Variable,
  Function,
};

struct TopDecl
{
  DeclKind kind = DeclKind::Variable;
  SourceRange range;
  std::string name;
  bool is_union = false;
  bool is_forward = false;
  std::vector<FieldDecl> fields;
  std::optional<std::string> selector;
  std::vector<Enumerator> enumerators;
  TypeSyntax type;
  ExprPtr init;
  bool is_extern = false;
  bool is_static = false;
  StmtPtr body;
};

struct TranslationUnit
{
  std::string path;
  std::vector<TopDecl> decls;
};

/// The parameter list of a function declarator (the innermost op).
const std::vector<Param>& function_params(const TypeSyntax& type);

} // namespace civ::frontend
