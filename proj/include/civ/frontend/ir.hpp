#pragma once

#include "civ/frontend/lexer.hpp"
#include "civ/frontend/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace civ::frontend {

enum class Opcode
{
  Load,
  Store,
  AddrOf,
  FieldAddr,
  Index,
  PtrArith,
  Arith,
  Compare,
  Cast,
  Call,
  IndirectCall,
  Assign,
  Branch,
  Switch,
  Return,
};

std::string to_string(Opcode op);

enum class ArithOp
{
  Add,
  Sub,
  Mul,
  Div,
  Mod,
  Shl,
  Shr,
  And,
  Or,
  Xor,
};

std::string to_string(ArithOp op);

enum class CmpPred
{
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
};

std::string to_string(CmpPred pred);

struct Operand
{
  enum class Kind
  {
    None,
    Temp,
    Var,
    Const,
    Str,
    Global,
    Func,
  };
  Kind kind = Kind::None;
  int temp = -1;
  /// Variable, global or function name; string literal contents.
  std::string name;
  std::int64_t value = 0;
  TypeRef type;
  /// Set on the constant produced by `sizeof`.
  TypeRef sizeof_type;
  /// Enum constant name when the constant came from one.
  std::string enum_name;

  bool is_temp() const { return kind == Kind::Temp; }
  bool is_var() const { return kind == Kind::Var; }
  bool is_const() const { return kind == Kind::Const; }
};

/// Operand layout per opcode:
///   Load       args[0]=address                        dst=temp
///   Store      args[0]=address args[1]=value
///   AddrOf     args[0]=Var|Global|Func                  dst=temp
///   FieldAddr  args[0]=base pointer, record/field     dst=temp
///   Index      args[0]=base pointer args[1]=index     dst=temp
///   PtrArith   args[0]=pointer args[1]=offset, arith Add|Sub
///   Arith      args[0..1], arith
///   Compare    args[0..1], pred
///   Cast       args[0], from_type -> type
///   Call       callee, args
///   IndirectCall args[0]=function pointer, args[1..]=arguments
///   Assign     var = args[0]
///   Branch     conditional: args[0], succ={then, else}; otherwise succ={target}
///   Switch     args[0], case_values[i] -> succ[i + 1], succ[0]=default
///   Return     optional args[0]
struct Instr
{
  Opcode op = Opcode::Assign;
  int id = -1;
  int block = -1;
  int dst = -1;
  std::string var;
  std::vector<Operand> args;
  std::string callee;
  std::string record;
  std::string field;
  ArithOp arith = ArithOp::Add;
  CmpPred pred = CmpPred::Eq;
  TypeRef type;
  TypeRef from_type;
  bool implicit = false;
  std::vector<std::int64_t> case_values;
  std::vector<int> succ;
  SourceRange range;

  bool is_terminator() const { return op == Opcode::Branch || op == Opcode::Switch || op == Opcode::Return; }
  bool is_call() const { return op == Opcode::Call || op == Opcode::IndirectCall; }
  /// Arguments passed to the callee (skips the function pointer of an indirect call).
  std::vector<Operand> call_args() const;
};

struct BasicBlock
{
  int id = 0;
  std::vector<int> instrs;
};

struct Variable
{
  std::string name;
  std::string source_name;
  TypeRef type;
  bool is_param = false;
  bool address_taken = false;
  SourcePos pos;
};

struct IRFunction
{
  std::string name;
  std::string file;
  std::vector<Variable> params;
  std::vector<Variable> locals;
  TypeRef return_type;
  TypeRef signature;
  std::vector<Instr> instrs;
  std::vector<BasicBlock> blocks;
  std::vector<TypeRef> temp_types;
  Compartment compartment = Compartment::Kernel;
  SourceRange range;

  const Variable* find_var(const std::string& name) const;
  const Instr& terminator(int block) const { return instrs[blocks[block].instrs.back()]; }
  /// Instruction defining temp `t`.
  const Instr* temp_def(int t) const;
  std::vector<int> successors(int block) const;
};

struct Global
{
  std::string name;
  std::string file;
  TypeRef type;
  Compartment compartment = Compartment::Kernel;
  bool defined = false;
  std::optional<std::int64_t> init;
  SourcePos pos;
};

struct Prototype
{
  std::string name;
  TypeRef type;
  SourcePos pos;
};

struct IRModule
{
  std::string path;
  std::vector<IRFunction> functions;
  std::vector<Global> globals;
  std::vector<Prototype> prototypes;
  std::vector<std::string> type_names;
};

} // namespace civ::frontend
