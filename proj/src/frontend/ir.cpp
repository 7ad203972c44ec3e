#include "civ/frontend/ir.hpp"
#include "civ/frontend/lower.hpp"

#include <sstream>

namespace civ::frontend {

std::string
to_string(Opcode op)
{
  switch (op)
  {
  case Opcode::Load:
    return "load";
  case Opcode::Store:
    return "store";
  case Opcode::AddrOf:
    return "addrof";
  case Opcode::FieldAddr:
    return "fieldaddr";
  case Opcode::Index:
    return "index";
  case Opcode::PtrArith:
    return "ptrarith";
  case Opcode::Arith:
    return "arith";
  case Opcode::Compare:
    return "cmp";
  case Opcode::Cast:
    return "cast";
  case Opcode::Call:
    return "call";
  case Opcode::IndirectCall:
    return "icall";
  case Opcode::Assign:
    return "assign";
  case Opcode::Branch:
    return "br";
  case Opcode::Switch:
    return "switch";
  case Opcode::Return:
    return "ret";
  }
  return "?";
}

std::string
to_string(ArithOp op)
{
  switch (op)
  {
  case ArithOp::Add:
    return "add";
  case ArithOp::Sub:
    return "sub";
  case ArithOp::Mul:
    return "mul";
  case ArithOp::Div:
    return "div";
  case ArithOp::Mod:
    return "mod";
  case ArithOp::Shl:
    return "shl";
  case ArithOp::Shr:
    return "shr";
  case ArithOp::And:
    return "and";
  case ArithOp::Or:
    return "or";
  case ArithOp::Xor:
    return "xor";
  }
  return "?";
}

std::string
to_string(CmpPred pred)
{
  switch (pred)
  {
  case CmpPred::Eq:
    return "eq";
  case CmpPred::Ne:
    return "ne";
  case CmpPred::Lt:
    return "lt";
  case CmpPred::Le:
    return "le";
  case CmpPred::Gt:
    return "gt";
  case CmpPred::Ge:
    return "ge";
  }
  return "?";
}

std::vector<Operand>
Instr::call_args() const
{
  if (op == Opcode::IndirectCall)
    return std::vector<Operand>(args.begin() + (args.empty() ? 0 : 1), args.end());
  return args;
}

const Variable*
IRFunction::find_var(const std::string& var) const
{
  for (const auto* list : {&params, &locals})
    for (const auto& v : *list)
      if (v.name == var)
        return &v;
  return nullptr;
}

const Instr*
IRFunction::temp_def(int t) const
{
  for (const auto& ins : instrs)
    if (ins.dst == t)
      return &ins;
  return nullptr;
}

std::vector<int>
IRFunction::successors(int block) const
{
  const Instr& term = terminator(block);
  if (term.op == Opcode::Return)
    return {};
  return term.succ;
}

const IRFunction*
Program::find_function(const std::string& name) const
{
  auto it = function_index_.find(name);
  if (it == function_index_.end())
    return nullptr;
  return &modules[it->second.first].functions[it->second.second];
}

IRFunction*
Program::find_function(const std::string& name)
{
  return const_cast<IRFunction*>(std::as_const(*this).find_function(name));
}

const Global*
Program::find_global(const std::string& name) const
{
  auto it = global_index_.find(name);
  if (it == global_index_.end())
    return nullptr;
  return &modules[it->second.first].globals[it->second.second];
}

Global*
Program::find_global(const std::string& name)
{
  return const_cast<Global*>(std::as_const(*this).find_global(name));
}

const Prototype*
Program::find_prototype(const std::string& name) const
{
  auto it = prototypes_.find(name);
  return it == prototypes_.end() ? nullptr : &it->second;
}

std::vector<const IRFunction*>
Program::functions() const
{
  std::vector<const IRFunction*> out;
  for (const auto& m : modules)
    for (const auto& f : m.functions)
      out.push_back(&f);
  return out;
}

std::vector<const Global*>
Program::globals() const
{
  std::vector<const Global*> out;
  for (const auto& m : modules)
    for (const auto& g : m.globals)
      out.push_back(&g);
  return out;
}

void
Program::reindex()
{
  function_index_.clear();
  global_index_.clear();
  prototypes_.clear();
  for (std::size_t m = 0; m < modules.size(); ++m)
  {
    for (std::size_t i = 0; i < modules[m].functions.size(); ++i)
    {
      const auto& f = modules[m].functions[i];
      function_index_[f.name] = {m, i};
      prototypes_[f.name] = Prototype{f.name, f.signature, f.range.begin};
    }
    for (std::size_t i = 0; i < modules[m].globals.size(); ++i)
      global_index_[modules[m].globals[i].name] = {m, i};
    for (const auto& p : modules[m].prototypes)
      prototypes_.emplace(p.name, p);
  }
}

namespace {

std::string
escape(const std::string& s)
{
  std::string out = "\"";
  for (char c : s)
  {
    if (c == '"' || c == '\\')
      out += '\\';
    if (c == '\n')
      out += "\\n";
    else if (static_cast<unsigned char>(c) < 0x20)
      out += "\\x" + std::to_string(static_cast<int>(c));
    else
      out += c;
  }
  return out + "\"";
}

std::string
operand_str(const Operand& op)
{
  switch (op.kind)
  {
  case Operand::Kind::None:
    return "_";
  case Operand::Kind::Temp:
    return "%" + std::to_string(op.temp);
  case Operand::Kind::Var:
    return op.name;
  case Operand::Kind::Const:
    if (op.sizeof_type)
      return std::to_string(op.value) + " /*sizeof " + type_str(op.sizeof_type) + "*/";
    if (!op.enum_name.empty())
      return std::to_string(op.value) + " /*" + op.enum_name + "*/";
    return std::to_string(op.value);
  case Operand::Kind::Str:
    return escape(op.name);
  case Operand::Kind::Global:
    return "@" + op.name;
  case Operand::Kind::Func:
    return "&" + op.name;
  }
  return "?";
}

std::string
args_str(const std::vector<Operand>& args, std::size_t from = 0)
{
  std::string out;
  for (std::size_t i = from; i < args.size(); ++i)
    out += (i > from ? ", " : "") + operand_str(args[i]);
  return out;
}

std::string
instr_str(const Instr& ins)
{
  std::ostringstream out;
  if (ins.dst >= 0)
    out << "%" << ins.dst << " = ";
  switch (ins.op)
  {
  case Opcode::Load:
    out << "load " << operand_str(ins.args[0]) << " : " << type_str(ins.type);
    break;
  case Opcode::Store:
    out << "store " << operand_str(ins.args[0]) << ", " << operand_str(ins.args[1]) << " : " << type_str(ins.type);
    break;
  case Opcode::AddrOf:
    out << "addrof " << operand_str(ins.args[0]);
    break;
  case Opcode::FieldAddr:
    out << "fieldaddr " << operand_str(ins.args[0]) << ", " << ins.record << "." << ins.field;
    break;
  case Opcode::Index:
    out << "index " << operand_str(ins.args[0]) << ", " << operand_str(ins.args[1]);
    break;
  case Opcode::PtrArith:
    out << "ptr" << to_string(ins.arith) << " " << args_str(ins.args);
    break;
  case Opcode::Arith:
    out << to_string(ins.arith) << " " << args_str(ins.args) << " : " << type_str(ins.type);
    break;
  case Opcode::Compare:
    out << "cmp " << to_string(ins.pred) << " " << args_str(ins.args);
    break;
  case Opcode::Cast:
    out << (ins.implicit ? "implicit-cast " : "cast ") << operand_str(ins.args[0]) << " : " << type_str(ins.from_type)
        << " -> " << type_str(ins.type);
    break;
  case Opcode::Call:
    out << "call " << ins.callee << "(" << args_str(ins.args) << ")";
    break;
  case Opcode::IndirectCall:
    out << "icall " << operand_str(ins.args[0]) << "(" << args_str(ins.args, 1) << ")";
    break;
  case Opcode::Assign:
    out << ins.var << " = " << operand_str(ins.args[0]);
    break;
  case Opcode::Branch:
    if (ins.args.empty())
      out << "br bb" << ins.succ[0];
    else
      out << "br " << operand_str(ins.args[0]) << ", bb" << ins.succ[0] << ", bb" << ins.succ[1];
    break;
  case Opcode::Switch:
    out << "switch " << operand_str(ins.args[0]) << " [";
    for (std::size_t i = 0; i < ins.case_values.size(); ++i)
      out << (i ? ", " : "") << ins.case_values[i] << ": bb" << ins.succ[i + 1];
    out << "] default bb" << ins.succ[0];
    break;
  case Opcode::Return:
    out << "ret";
    if (!ins.args.empty())
      out << " " << operand_str(ins.args[0]);
    break;
  }
  out << "  ; " << ins.range.begin.line << ":" << ins.range.begin.column;
  return out.str();
}

} // namespace

std::string
dump_function(const IRFunction& fn)
{
  std::ostringstream out;
  out << "function " << fn.name << "(";
  for (std::size_t i = 0; i < fn.params.size(); ++i)
    out << (i ? ", " : "") << fn.params[i].name << ": " << type_str(fn.params[i].type);
  out << ") -> " << type_str(fn.return_type) << " [" << to_string(fn.compartment) << "]\n";
  for (const auto& v : fn.locals)
    out << "  local " << v.name << ": " << type_str(v.type) << (v.address_taken ? " addressed" : "") << "\n";
  for (const auto& b : fn.blocks)
  {
    out << "bb" << b.id << ":\n";
    for (int i : b.instrs)
      out << "  " << instr_str(fn.instrs[static_cast<std::size_t>(i)]) << "\n";
  }
  return out.str();
}

std::string
dump_ir(const Program& program, const IRModule& module)
{
  std::ostringstream out;
  out << "module " << module.path << "\n";
  for (const auto& name : module.type_names)
  {
    auto space = name.find(' ');
    std::string kind = name.substr(0, space);
    std::string id = name.substr(space + 1);
    out << "type " << name;
    if (kind == "struct" || kind == "union")
    {
      const TypeDecl* decl = program.types.record(id);
      if (decl->selector_field)
        out << " selector(" << decl->selector_owner << "." << *decl->selector_field << ")";
      out << " {";
      for (const auto& f : decl->fields)
        out << " " << f.name << ": " << type_str(f.type) << ";";
      out << " }";
    }
    else if (kind == "enum")
    {
      if (const TypeDecl* decl = program.types.enum_decl(id))
      {
        out << " {";
        for (const auto& [n, v] : decl->enumerators)
          out << " " << n << " = " << v << ";";
        out << " }";
      }
    }
    else if (kind == "typedef")
    {
      auto t = program.types.typedef_type(id);
      auto plain = std::make_shared<Type>(*t);
      plain->alias.clear();
      out << " = " << type_str(plain);
    }
    out << "\n";
  }
  for (const auto& g : module.globals)
  {
    out << "global " << g.name << ": " << type_str(g.type);
    if (g.init)
      out << " = " << *g.init;
    out << (g.defined ? "" : " extern") << " [" << to_string(g.compartment) << "]\n";
  }
  for (const auto& p : module.prototypes)
    out << "declare " << p.name << ": " << type_str(p.type) << "\n";
  for (const auto& fn : module.functions)
    out << "\n" << dump_function(fn);
  return out.str();
}

std::string
dump_ir(const Program& program)
{
  std::string out;
  for (const auto& m : program.modules)
    out += dump_ir(program, m) + "\n";
  return out;
}

} // namespace civ::frontend
