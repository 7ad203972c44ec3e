#include "civ/frontend/lower.hpp"

#include "civ/frontend/parser.hpp"

#include <set>

namespace civ::frontend {

namespace {

struct Value
{
  Operand op;
  TypeRef type;
};

struct LValue
{
  bool is_var = false;
  std::string var;
  Operand addr;
  TypeRef type;
};

struct ConstValue
{
  std::int64_t value = 0;
  TypeRef type;
};

TypeRef
promote(const TypeRef& t)
{
  if (is_integer(t) && t->bits < 32)
    return int_type(32, true);
  if (is_integer(t) && !t->alias.empty())
    return int_type(t->bits, t->is_signed);
  return t;
}

TypeRef
arith_type(const TypeRef& a, const TypeRef& b)
{
  TypeRef pa = promote(a);
  TypeRef pb = promote(b);
  if (pa->bits != pb->bits)
    return pa->bits > pb->bits ? pa : pb;
  return int_type(pa->bits, pa->is_signed && pb->is_signed);
}

std::optional<std::int64_t>
fold(ArithOp op, std::int64_t a, std::int64_t b, const TypeRef& type)
{
  int bits = type->bits;
  std::uint64_t mask = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  auto ua = static_cast<std::uint64_t>(a);
  auto ub = static_cast<std::uint64_t>(b);
  std::uint64_t r = 0;
  switch (op)
  {
  case ArithOp::Add:
    r = ua + ub;
    break;
  case ArithOp::Sub:
    r = ua - ub;
    break;
  case ArithOp::Mul:
    r = ua * ub;
    break;
  case ArithOp::Div:
  case ArithOp::Mod:
    if (b == 0)
      return std::nullopt;
    if (type->is_signed)
    {
      if (b == -1)
        r = op == ArithOp::Div ? std::uint64_t{0} - ua : 0;
      else
        r = static_cast<std::uint64_t>(op == ArithOp::Div ? a / b : a % b);
    }
    else
    {
      r = op == ArithOp::Div ? (ua & mask) / (ub & mask) : (ua & mask) % (ub & mask);
    }
    break;
  case ArithOp::Shl:
    r = ua << (ub & 63);
    break;
  case ArithOp::Shr:
    r = type->is_signed ? static_cast<std::uint64_t>(wrap_to(a, type) >> (ub & 63)) : (ua & mask) >> (ub & 63);
    break;
  case ArithOp::And:
    r = ua & ub;
    break;
  case ArithOp::Or:
    r = ua | ub;
    break;
  case ArithOp::Xor:
    r = ua ^ ub;
    break;
  }
  return wrap_to(static_cast<std::int64_t>(r), type);
}

std::optional<ArithOp>
arith_op(const std::string& op)
{
  static const std::map<std::string, ArithOp> kOps = {
    {"+", ArithOp::Add}, {"-", ArithOp::Sub}, {"*", ArithOp::Mul}, {"/", ArithOp::Div},
    {"%", ArithOp::Mod}, {"<<", ArithOp::Shl}, {">>", ArithOp::Shr}, {"&", ArithOp::And},
    {"|", ArithOp::Or},  {"^", ArithOp::Xor},
  };
  auto it = kOps.find(op);
  if (it == kOps.end())
    return std::nullopt;
  return it->second;
}

std::optional<CmpPred>
cmp_pred(const std::string& op)
{
  static const std::map<std::string, CmpPred> kPreds = {
    {"==", CmpPred::Eq}, {"!=", CmpPred::Ne}, {"<", CmpPred::Lt},
    {"<=", CmpPred::Le}, {">", CmpPred::Gt},  {">=", CmpPred::Ge},
  };
  auto it = kPreds.find(op);
  if (it == kPreds.end())
    return std::nullopt;
  return it->second;
}

TypeRef
literal_type(const Expr& e)
{
  if (e.kind == ExprKind::CharLit)
    return int_type(32, true);
  bool has_u = e.text.find_first_of("uU") != std::string::npos;
  bool has_l = e.text.find_first_of("lL") != std::string::npos;
  auto u = static_cast<std::uint64_t>(e.value);
  if (!has_l && !has_u && u <= 0x7fffffffULL)
    return int_type(32, true);
  if (!has_l && has_u && u <= 0xffffffffULL)
    return int_type(32, false);
  return int_type(64, !has_u && u <= 0x7fffffffffffffffULL);
}

/// Shared state for lowering every file of one run.
struct Context
{
  TypeTable& types;
  std::vector<Warning>& warnings;
  std::map<std::string, Prototype> protos;
  std::map<std::string, Global> globals;
  std::set<std::string> defined;

  TypeRef
  base_type(const TypeSyntax& syntax)
  {
    const auto& w = syntax.specifiers;
    if (w.size() == 2 && (w[0] == "struct" || w[0] == "union"))
    {
      const TypeDecl* decl = types.record(w[1]);
      if (!decl)
        throw TypeError("unknown " + w[0] + " '" + w[1] + "'", syntax.pos);
      if ((decl->kind == TypeDeclKind::Union) != (w[0] == "union"))
        throw TypeError("'" + w[1] + "' is not a " + w[0], syntax.pos);
      return record_type(w[1], w[0] == "union");
    }
    if (w.size() == 2 && w[0] == "enum")
    {
      if (!types.enum_decl(w[1]))
        throw TypeError("unknown enum '" + w[1] + "'", syntax.pos);
      return int_type(32, true, "enum " + w[1]);
    }
    if (w.size() == 1)
    {
      if (TypeRef t = types.typedef_type(w[0]))
        return with_alias(t, w[0]);
    }
    int bits = 32;
    bool is_signed = true;
    int longs = 0;
    bool saw_int_word = false;
    for (const auto& word : w)
    {
      if (word == "void")
      {
        if (w.size() != 1)
          throw TypeError("invalid use of void", syntax.pos);
        return void_type();
      }
      if (word == "char")
        bits = 8;
      else if (word == "short")
        bits = 16;
      else if (word == "long")
        ++longs;
      else if (word == "unsigned")
        is_signed = false;
      else if (word == "signed" || word == "int")
        ;
      else
        throw TypeError("unknown type name '" + word + "'", syntax.pos);
      saw_int_word = true;
    }
    if (!saw_int_word)
      throw TypeError("missing type specifier", syntax.pos);
    if (longs > 0)
      bits = 64;
    return int_type(bits, is_signed);
  }

  TypeRef
  resolve(const TypeSyntax& syntax)
  {
    TypeRef t = base_type(syntax);
    for (auto it = syntax.ops.rbegin(); it != syntax.ops.rend(); ++it)
    {
      switch (it->kind)
      {
      case DeclOp::Kind::Pointer:
        t = pointer_to(t);
        break;
      case DeclOp::Kind::Array:
      {
        if (is_void(t) || t->kind == TypeKind::Function)
          throw TypeError("invalid array element type", syntax.pos);
        std::int64_t length = 0;
        if (it->size)
        {
          auto cv = const_eval(*it->size);
          if (!cv || cv->value <= 0)
            throw TypeError("array size must be a positive constant", it->size->range.begin);
          length = cv->value;
        }
        t = array_of(t, length);
        break;
      }
      case DeclOp::Kind::Function:
      {
        if (is_array(t) || t->kind == TypeKind::Function)
          throw TypeError("function cannot return an array or function", syntax.pos);
        if (is_record(t))
          throw TypeError("returning aggregates by value is not supported", syntax.pos);
        std::vector<TypeRef> params;
        for (const auto& p : it->params)
          params.push_back(param_type(p));
        t = function_type(t, std::move(params));
        break;
      }
      }
    }
    return t;
  }

  TypeRef
  param_type(const Param& p)
  {
    TypeRef t = resolve(p.type);
    if (is_array(t))
      t = pointer_to(t->elem);
    else if (t->kind == TypeKind::Function)
      t = pointer_to(t);
    if (is_record(t))
      throw TypeError("passing aggregates by value is not supported", p.pos);
    if (is_void(t))
      throw TypeError("parameter of type void", p.pos);
    return t;
  }

  std::optional<ConstValue>
  const_eval(const Expr& e)
  {
    switch (e.kind)
    {
    case ExprKind::IntLit:
    case ExprKind::CharLit:
    {
      TypeRef t = literal_type(e);
      return ConstValue{wrap_to(e.value, t), t};
    }
    case ExprKind::Ident:
      if (auto v = types.enum_constant(e.text))
        return ConstValue{*v, int_type(32, true)};
      return std::nullopt;
    case ExprKind::SizeofType:
      return ConstValue{types.size_of(resolve(*e.type)), int_type(64, false)};
    case ExprKind::Cast:
    {
      TypeRef t = resolve(*e.type);
      auto v = const_eval(*e.kids[0]);
      if (!v || !is_integer(t))
        return std::nullopt;
      return ConstValue{wrap_to(v->value, t), t};
    }
    case ExprKind::Unary:
    {
      auto v = const_eval(*e.kids[0]);
      if (!v)
        return std::nullopt;
      TypeRef t = promote(v->type);
      if (e.text == "-")
        return ConstValue{*fold(ArithOp::Sub, 0, v->value, t), t};
      if (e.text == "+")
        return ConstValue{v->value, t};
      if (e.text == "~")
        return ConstValue{*fold(ArithOp::Xor, v->value, -1, t), t};
      if (e.text == "!")
        return ConstValue{v->value == 0 ? 1 : 0, int_type(32, true)};
      return std::nullopt;
    }
    case ExprKind::Binary:
    {
      auto a = const_eval(*e.kids[0]);
      auto b = const_eval(*e.kids[1]);
      if (!a || !b)
        return std::nullopt;
      if (auto op = arith_op(e.text))
      {
        TypeRef t = (*op == ArithOp::Shl || *op == ArithOp::Shr) ? promote(a->type) : arith_type(a->type, b->type);
        auto r = fold(*op, a->value, b->value, t);
        if (!r)
          return std::nullopt;
        return ConstValue{*r, t};
      }
      if (auto pred = cmp_pred(e.text))
      {
        std::int64_t x = a->value;
        std::int64_t y = b->value;
        bool r = false;
        switch (*pred)
        {
        case CmpPred::Eq:
          r = x == y;
          break;
        case CmpPred::Ne:
          r = x != y;
          break;
        case CmpPred::Lt:
          r = x < y;
          break;
        case CmpPred::Le:
          r = x <= y;
          break;
        case CmpPred::Gt:
          r = x > y;
          break;
        case CmpPred::Ge:
          r = x >= y;
          break;
        }
        return ConstValue{r ? 1 : 0, int_type(32, true)};
      }
      if (e.text == "&&")
        return ConstValue{(a->value && b->value) ? 1 : 0, int_type(32, true)};
      if (e.text == "||")
        return ConstValue{(a->value || b->value) ? 1 : 0, int_type(32, true)};
      return std::nullopt;
    }
    case ExprKind::Cond:
    {
      auto c = const_eval(*e.kids[0]);
      if (!c)
        return std::nullopt;
      return const_eval(*e.kids[c->value ? 1 : 2]);
    }
    default:
      return std::nullopt;
    }
  }
};

class FunctionLowerer
{
public:
  FunctionLowerer(Context& ctx, const TopDecl& decl, const std::string& file) : ctx_(ctx), decl_(decl)
  {
    fn_.name = decl.name;
    fn_.file = file;
    fn_.range = decl.range;
    fn_.signature = ctx.protos.at(decl.name).type;
    fn_.return_type = fn_.signature->elem;
  }

  IRFunction
  run()
  {
    new_block();
    scopes_.emplace_back();
    const auto& params = function_params(decl_.type);
    for (std::size_t i = 0; i < params.size(); ++i)
    {
      const Param& p = params[i];
      if (p.name.empty())
        throw TypeError("parameter " + std::to_string(i + 1) + " of '" + decl_.name + "' has no name", p.pos);
      if (scopes_.back().count(p.name))
        throw TypeError("duplicate parameter '" + p.name + "'", p.pos);
      Variable v;
      v.name = p.name;
      v.source_name = p.name;
      v.type = fn_.signature->params[i];
      v.is_param = true;
      v.pos = p.pos;
      used_names_.insert(p.name);
      scopes_.back()[p.name] = p.name;
      fn_.params.push_back(v);
    }
    for (const auto& item : decl_.body->items)
      lower_stmt(*item);
    if (!terminated())
    {
      Instr ret;
      ret.op = Opcode::Return;
      ret.range = SourceRange{decl_.range.end, decl_.range.end};
      emit(std::move(ret));
    }
    for (auto& block : fn_.blocks)
      if (block.instrs.empty() || !fn_.instrs[block.instrs.back()].is_terminator())
        throw InternalError("block without terminator in '" + fn_.name + "'");
    return std::move(fn_);
  }

private:
  // Blocks and emission.

  int
  new_block()
  {
    int id = static_cast<int>(fn_.blocks.size());
    fn_.blocks.push_back(BasicBlock{id, {}});
    if (fn_.blocks.size() == 1)
      cur_ = 0;
    return id;
  }

  bool
  terminated() const
  {
    const auto& b = fn_.blocks[static_cast<std::size_t>(cur_)];
    return !b.instrs.empty() && fn_.instrs[b.instrs.back()].is_terminator();
  }

  int
  emit(Instr ins)
  {
    if (terminated())
      cur_ = new_block();
    ins.id = static_cast<int>(fn_.instrs.size());
    ins.block = cur_;
    fn_.blocks[cur_].instrs.push_back(ins.id);
    fn_.instrs.push_back(std::move(ins));
    return static_cast<int>(fn_.instrs.size()) - 1;
  }

  Value
  emit_value(Instr ins, TypeRef type)
  {
    int t = static_cast<int>(fn_.temp_types.size());
    fn_.temp_types.push_back(type);
    ins.dst = t;
    ins.type = type;
    emit(std::move(ins));
    Operand op;
    op.kind = Operand::Kind::Temp;
    op.temp = t;
    op.type = type;
    return Value{op, type};
  }

  static Instr
  make(Opcode op, const SourceRange& range)
  {
    Instr ins;
    ins.op = op;
    ins.range = range;
    return ins;
  }

  void
  br(int target, const SourceRange& range)
  {
    Instr ins = make(Opcode::Branch, range);
    ins.succ = {target};
    emit(std::move(ins));
  }

  void
  cbr(const Operand& cond, int t, int f, const SourceRange& range)
  {
    Instr ins = make(Opcode::Branch, range);
    ins.args = {cond};
    ins.succ = {t, f};
    emit(std::move(ins));
  }

  void
  assign(const std::string& var, const Operand& value, const TypeRef& type, const SourceRange& range)
  {
    Instr ins = make(Opcode::Assign, range);
    ins.var = var;
    ins.args = {value};
    ins.type = type;
    emit(std::move(ins));
  }

  static Operand
  constant(std::int64_t v, TypeRef type)
  {
    Operand op;
    op.kind = Operand::Kind::Const;
    op.value = v;
    op.type = std::move(type);
    return op;
  }

  // Names.

  Variable*
  find_local(const std::string& unique)
  {
    for (auto* list : {&fn_.params, &fn_.locals})
      for (auto& v : *list)
        if (v.name == unique)
          return &v;
    return nullptr;
  }

  Variable*
  lookup_local(const std::string& name)
  {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
    {
      auto found = it->find(name);
      if (found != it->end())
        return find_local(found->second);
    }
    return nullptr;
  }

  std::string
  declare_local(const std::string& name, TypeRef type, const SourcePos& pos)
  {
    if (scopes_.back().count(name))
      throw TypeError("redeclaration of '" + name + "'", pos);
    std::string unique = name;
    for (int n = 1; used_names_.count(unique); ++n)
      unique = name + "." + std::to_string(n);
    used_names_.insert(unique);
    scopes_.back()[name] = unique;
    Variable v;
    v.name = unique;
    v.source_name = name;
    v.type = std::move(type);
    v.pos = pos;
    fn_.locals.push_back(v);
    return unique;
  }

  std::string
  hidden(const std::string& prefix, TypeRef type, const SourcePos& pos)
  {
    std::string name = prefix + "." + std::to_string(hidden_++);
    used_names_.insert(name);
    Variable v;
    v.name = name;
    v.source_name = name;
    v.type = std::move(type);
    v.pos = pos;
    fn_.locals.push_back(v);
    return name;
  }

  // Conversions.

  Value
  convert(Value v, const TypeRef& to, const SourceRange& range, bool is_explicit = false)
  {
    const TypeRef& from = v.type;
    if (is_record(from) || is_record(to) || is_array(to))
      throw TypeError("aggregate values cannot be copied or converted", range.begin);
    if (same_type(from, to))
    {
      v.type = to;
      v.op.type = to;
      return v;
    }
    if (is_integer(from) && is_integer(to) && !is_explicit)
    {
      if (v.op.is_const())
        v.op.value = wrap_to(v.op.value, to);
      v.type = to;
      v.op.type = to;
      return v;
    }
    if (!is_explicit)
    {
      if (is_integer(from) && is_pointer(to) && v.op.is_const() && v.op.value == 0)
      {
        v.type = to;
        v.op.type = to;
        return v;
      }
      bool ok = is_pointer(from) && is_pointer(to) && (is_void_pointer(from) || is_void_pointer(to)) &&
                !is_function_pointer(from) && !is_function_pointer(to);
      if (!ok)
        throw TypeError("cannot convert '" + type_str(from) + "' to '" + type_str(to) + "' implicitly", range.begin);
    }
    else if (!(is_scalar(from) && is_scalar(to)))
    {
      throw TypeError("invalid cast from '" + type_str(from) + "' to '" + type_str(to) + "'", range.begin);
    }
    Instr ins = make(Opcode::Cast, range);
    ins.args = {v.op};
    ins.from_type = from;
    ins.implicit = !is_explicit;
    return emit_value(std::move(ins), to);
  }

  // Lvalues.

  LValue
  var_lvalue(Variable& v, const SourceRange& range)
  {
    if (is_scalar(v.type))
    {
      LValue lv;
      lv.is_var = true;
      lv.var = v.name;
      lv.type = v.type;
      return lv;
    }
    Operand var;
    var.kind = Operand::Kind::Var;
    var.name = v.name;
    var.type = v.type;
    v.address_taken = true;
    Instr ins = make(Opcode::AddrOf, range);
    ins.args = {var};
    LValue lv;
    lv.addr = emit_value(std::move(ins), pointer_to(v.type)).op;
    lv.type = v.type;
    return lv;
  }

  LValue
  lvalue(const Expr& e)
  {
    switch (e.kind)
    {
    case ExprKind::Ident:
    {
      if (Variable* v = lookup_local(e.text))
        return var_lvalue(*v, e.range);
      auto g = ctx_.globals.find(e.text);
      if (g != ctx_.globals.end())
      {
        Operand op;
        op.kind = Operand::Kind::Global;
        op.name = e.text;
        op.type = g->second.type;
        Instr ins = make(Opcode::AddrOf, e.range);
        ins.args = {op};
        LValue lv;
        lv.addr = emit_value(std::move(ins), pointer_to(g->second.type)).op;
        lv.type = g->second.type;
        return lv;
      }
      throw TypeError("'" + e.text + "' is not an assignable object", e.range.begin);
    }
    case ExprKind::Unary:
      if (e.text == "*")
      {
        Value p = rvalue(*e.kids[0]);
        if (!is_pointer(p.type) || is_void_pointer(p.type))
          throw TypeError("dereference of non-pointer type '" + type_str(p.type) + "'", e.range.begin);
        LValue lv;
        lv.addr = p.op;
        lv.type = p.type->elem;
        return lv;
      }
      break;
    case ExprKind::Index:
    {
      Value base = rvalue(*e.kids[0]);
      Value index = rvalue(*e.kids[1]);
      if (is_integer(base.type) && is_pointer(index.type))
        std::swap(base, index);
      if (!is_pointer(base.type) || is_void_pointer(base.type) || !is_integer(index.type))
        throw TypeError("subscript requires a pointer or array and an integer", e.range.begin);
      Instr ins = make(Opcode::Index, e.range);
      ins.args = {base.op, index.op};
      LValue lv;
      lv.addr = emit_value(std::move(ins), base.type).op;
      lv.type = base.type->elem;
      return lv;
    }
    case ExprKind::Member:
    {
      Operand base;
      TypeRef rec;
      if (e.arrow)
      {
        Value p = rvalue(*e.kids[0]);
        if (!is_record_pointer(p.type))
          throw TypeError("'->' applied to non-aggregate pointer '" + type_str(p.type) + "'", e.range.begin);
        base = p.op;
        rec = p.type->elem;
      }
      else
      {
        LValue inner = lvalue(*e.kids[0]);
        if (!is_record(inner.type) || inner.is_var)
          throw TypeError("'.' applied to non-aggregate '" + type_str(inner.type) + "'", e.range.begin);
        base = inner.addr;
        rec = inner.type;
      }
      const FieldInfo* f = ctx_.types.field(rec->record, e.text);
      if (!f)
        throw TypeError("no field '" + e.text + "' in '" + type_str(rec) + "'", e.range.begin);
      Instr ins = make(Opcode::FieldAddr, e.range);
      ins.args = {base};
      ins.record = rec->record;
      ins.field = e.text;
      LValue lv;
      lv.addr = emit_value(std::move(ins), pointer_to(f->type)).op;
      lv.type = f->type;
      return lv;
    }
    default:
      break;
    }
    throw TypeError("expression is not assignable", e.range.begin);
  }

  Value
  read(const LValue& lv, const SourceRange& range)
  {
    if (lv.is_var)
    {
      Operand op;
      op.kind = Operand::Kind::Var;
      op.name = lv.var;
      op.type = lv.type;
      return Value{op, lv.type};
    }
    if (is_array(lv.type))
    {
      Operand op = lv.addr;
      op.type = pointer_to(lv.type->elem);
      return Value{op, op.type};
    }
    if (is_record(lv.type))
      throw TypeError("aggregate values cannot be used here", range.begin);
    if (lv.type->kind == TypeKind::Function)
      return Value{lv.addr, pointer_to(lv.type)};
    Instr ins = make(Opcode::Load, range);
    ins.args = {lv.addr};
    return emit_value(std::move(ins), lv.type);
  }

  void
  write(const LValue& lv, const Value& v, const SourceRange& range)
  {
    if (!is_scalar(lv.type))
      throw TypeError("cannot assign to '" + type_str(lv.type) + "'", range.begin);
    if (lv.is_var)
    {
      assign(lv.var, v.op, lv.type, range);
      return;
    }
    Instr ins = make(Opcode::Store, range);
    ins.args = {lv.addr, v.op};
    ins.type = lv.type;
    emit(std::move(ins));
  }

  // Rvalues.

  Value
  rvalue(const Expr& e)
  {
    switch (e.kind)
    {
    case ExprKind::IntLit:
    case ExprKind::CharLit:
    {
      TypeRef t = literal_type(e);
      return Value{constant(wrap_to(e.value, t), t), t};
    }
    case ExprKind::StrLit:
    {
      Operand op;
      op.kind = Operand::Kind::Str;
      op.name = e.text;
      op.type = pointer_to(int_type(8, true));
      return Value{op, op.type};
    }
    case ExprKind::Ident:
    {
      if (lookup_local(e.text) || ctx_.globals.count(e.text))
        return read(lvalue(e), e.range);
      if (auto v = ctx_.types.enum_constant(e.text))
      {
        Operand op = constant(*v, int_type(32, true));
        op.enum_name = e.text;
        return Value{op, op.type};
      }
      auto proto = ctx_.protos.find(e.text);
      if (proto != ctx_.protos.end())
      {
        Operand fn;
        fn.kind = Operand::Kind::Func;
        fn.name = e.text;
        fn.type = proto->second.type;
        Instr ins = make(Opcode::AddrOf, e.range);
        ins.args = {fn};
        return emit_value(std::move(ins), pointer_to(proto->second.type));
      }
      throw TypeError("use of undeclared identifier '" + e.text + "'", e.range.begin);
    }
    case ExprKind::Unary:
      return unary(e);
    case ExprKind::Postfix:
      return incdec(e, false);
    case ExprKind::Binary:
      if (e.text == "&&" || e.text == "||")
        return materialize_cond(e);
      return binop(e.text, rvalue(*e.kids[0]), rvalue(*e.kids[1]), e.range);
    case ExprKind::Assign:
      return assignment(e);
    case ExprKind::Cond:
      return conditional(e);
    case ExprKind::Call:
      return call(e);
    case ExprKind::Index:
    case ExprKind::Member:
      return read(lvalue(e), e.range);
    case ExprKind::Cast:
    {
      TypeRef to = ctx_.resolve(*e.type);
      Value v = rvalue(*e.kids[0]);
      if (is_void(to))
        return Value{Operand{}, to};
      return convert(v, to, e.range, true);
    }
    case ExprKind::SizeofType:
    {
      TypeRef t = ctx_.resolve(*e.type);
      Operand op = constant(ctx_.types.size_of(t), int_type(64, false));
      op.sizeof_type = t;
      return Value{op, op.type};
    }
    case ExprKind::SizeofExpr:
    {
      TypeRef t = static_type(*e.kids[0]);
      Operand op = constant(ctx_.types.size_of(t), int_type(64, false));
      op.sizeof_type = t;
      return Value{op, op.type};
    }
    }
    throw InternalError("unhandled expression kind");
  }

  TypeRef
  static_type(const Expr& e)
  {
    switch (e.kind)
    {
    case ExprKind::Ident:
      if (Variable* v = lookup_local(e.text))
        return v->type;
      if (auto g = ctx_.globals.find(e.text); g != ctx_.globals.end())
        return g->second.type;
      if (ctx_.types.enum_constant(e.text))
        return int_type(32, true);
      break;
    case ExprKind::IntLit:
    case ExprKind::CharLit:
      return literal_type(e);
    case ExprKind::Cast:
      return ctx_.resolve(*e.type);
    case ExprKind::Unary:
      if (e.text == "*")
      {
        TypeRef t = static_type(*e.kids[0]);
        if (is_pointer(t) || is_array(t))
          return t->elem;
      }
      break;
    case ExprKind::Index:
    {
      TypeRef t = static_type(*e.kids[0]);
      if (is_pointer(t) || is_array(t))
        return t->elem;
      break;
    }
    case ExprKind::Member:
    {
      TypeRef t = static_type(*e.kids[0]);
      if (e.arrow && is_pointer(t))
        t = t->elem;
      if (is_record(t))
        if (const FieldInfo* f = ctx_.types.field(t->record, e.text))
          return f->type;
      break;
    }
    default:
      break;
    }
    throw TypeError("unsupported operand of sizeof", e.range.begin);
  }

  Value
  unary(const Expr& e)
  {
    const std::string& op = e.text;
    if (op == "&")
    {
      const Expr& inner = *e.kids[0];
      if (inner.kind == ExprKind::Ident && !lookup_local(inner.text) && !ctx_.globals.count(inner.text) &&
          ctx_.protos.count(inner.text))
        return rvalue(inner);
      LValue lv = lvalue(inner);
      if (lv.is_var)
      {
        Variable* v = find_local(lv.var);
        v->address_taken = true;
        Operand var;
        var.kind = Operand::Kind::Var;
        var.name = lv.var;
        var.type = lv.type;
        Instr ins = make(Opcode::AddrOf, e.range);
        ins.args = {var};
        return emit_value(std::move(ins), pointer_to(lv.type));
      }
      Operand addr = lv.addr;
      addr.type = pointer_to(lv.type);
      return Value{addr, addr.type};
    }
    if (op == "*")
    {
      Value p = rvalue(*e.kids[0]);
      if (is_function_pointer(p.type))
        return p;
      return read(lvalue(e), e.range);
    }
    if (op == "++" || op == "--")
      return incdec(e, true);
    if (op == "!")
    {
      Value v = rvalue(*e.kids[0]);
      if (!is_scalar(v.type))
        throw TypeError("'!' requires a scalar operand", e.range.begin);
      return compare(CmpPred::Eq, v, Value{constant(0, v.type), v.type}, e.range);
    }
    Value v = rvalue(*e.kids[0]);
    if (!is_integer(v.type))
      throw TypeError("unary '" + op + "' requires an integer operand", e.range.begin);
    TypeRef t = promote(v.type);
    if (op == "+")
      return Value{v.op, t};
    if (op == "-")
      return arith(ArithOp::Sub, Value{constant(0, t), t}, v, t, e.range);
    if (op == "~")
      return arith(ArithOp::Xor, v, Value{constant(-1, t), t}, t, e.range);
    throw TypeError("unknown unary operator '" + op + "'", e.range.begin);
  }

  Value
  arith(ArithOp op, const Value& a, const Value& b, const TypeRef& type, const SourceRange& range)
  {
    if (a.op.is_const() && b.op.is_const())
    {
      if (auto r = fold(op, a.op.value, b.op.value, type))
        return Value{constant(*r, type), type};
    }
    if ((op == ArithOp::Div || op == ArithOp::Mod) && b.op.is_const() && b.op.value == 0)
      ctx_.warnings.push_back(Warning{range.begin, "division by constant zero"});
    Instr ins = make(Opcode::Arith, range);
    ins.arith = op;
    ins.args = {a.op, b.op};
    return emit_value(std::move(ins), type);
  }

  Value
  compare(CmpPred pred, const Value& a, const Value& b, const SourceRange& range)
  {
    bool ok = (is_integer(a.type) && is_integer(b.type)) || (is_pointer(a.type) && is_pointer(b.type)) ||
              (is_pointer(a.type) && b.op.is_const() && b.op.value == 0) ||
              (is_pointer(b.type) && a.op.is_const() && a.op.value == 0);
    if (!ok)
      throw TypeError("cannot compare '" + type_str(a.type) + "' with '" + type_str(b.type) + "'", range.begin);
    Instr ins = make(Opcode::Compare, range);
    ins.pred = pred;
    ins.args = {a.op, b.op};
    return emit_value(std::move(ins), int_type(32, true));
  }

  Value
  binop(const std::string& op, Value a, Value b, const SourceRange& range)
  {
    if (is_record(a.type) || is_record(b.type))
      throw TypeError("aggregate operand to '" + op + "'", range.begin);
    if (auto pred = cmp_pred(op))
      return compare(*pred, a, b, range);
    auto aop = arith_op(op);
    if (!aop)
      throw TypeError("unknown operator '" + op + "'", range.begin);
    if (*aop == ArithOp::Add || *aop == ArithOp::Sub)
    {
      if (*aop == ArithOp::Add && is_integer(a.type) && is_pointer(b.type))
        std::swap(a, b);
      if (is_pointer(a.type) && is_integer(b.type))
      {
        if (is_void_pointer(a.type) || is_function_pointer(a.type))
          throw TypeError("arithmetic on '" + type_str(a.type) + "'", range.begin);
        Instr ins = make(Opcode::PtrArith, range);
        ins.arith = *aop;
        ins.args = {a.op, b.op};
        return emit_value(std::move(ins), a.type);
      }
      if (*aop == ArithOp::Sub && is_pointer(a.type) && is_pointer(b.type))
      {
        if (!same_type(a.type, b.type))
          throw TypeError("subtraction of incompatible pointers", range.begin);
        Instr ins = make(Opcode::Arith, range);
        ins.arith = ArithOp::Sub;
        ins.args = {a.op, b.op};
        return emit_value(std::move(ins), int_type(64, true));
      }
    }
    if (!is_integer(a.type) || !is_integer(b.type))
      throw TypeError("operator '" + op + "' requires integer operands, got '" + type_str(a.type) + "' and '" +
                        type_str(b.type) + "'",
                      range.begin);
    TypeRef t = (*aop == ArithOp::Shl || *aop == ArithOp::Shr) ? promote(a.type) : arith_type(a.type, b.type);
    return arith(*aop, a, b, t, range);
  }

  Value
  assignment(const Expr& e)
  {
    LValue lv = lvalue(*e.kids[0]);
    if (!is_scalar(lv.type))
      throw TypeError("cannot assign to '" + type_str(lv.type) + "'", e.range.begin);
    Value rhs;
    if (e.text == "=")
    {
      rhs = convert(rvalue(*e.kids[1]), lv.type, e.range);
    }
    else
    {
      Value current = read(lv, e.range);
      Value operand = rvalue(*e.kids[1]);
      rhs = convert(binop(e.text.substr(0, e.text.size() - 1), current, operand, e.range), lv.type, e.range);
    }
    write(lv, rhs, e.range);
    return rhs;
  }

  Value
  incdec(const Expr& e, bool prefix)
  {
    LValue lv = lvalue(*e.kids[0]);
    if (!is_scalar(lv.type))
      throw TypeError("increment of non-scalar", e.range.begin);
    Value old = read(lv, e.range);
    if (!prefix && lv.is_var && !discard_)
    {
      std::string copy = hidden("post", lv.type, e.range.begin);
      assign(copy, old.op, lv.type, e.range);
      Operand op;
      op.kind = Operand::Kind::Var;
      op.name = copy;
      op.type = lv.type;
      old = Value{op, lv.type};
    }
    TypeRef one_type = int_type(32, true);
    Value updated = binop(e.text == "++" ? "+" : "-", old, Value{constant(1, one_type), one_type}, e.range);
    updated = convert(updated, lv.type, e.range);
    write(lv, updated, e.range);
    return prefix ? updated : old;
  }

  Value
  materialize_cond(const Expr& e)
  {
    TypeRef t = int_type(32, true);
    std::string var = hidden("sc", t, e.range.begin);
    int yes = new_block();
    int no = new_block();
    int join = new_block();
    lower_cond(e, yes, no);
    cur_ = yes;
    assign(var, constant(1, t), t, e.range);
    br(join, e.range);
    cur_ = no;
    assign(var, constant(0, t), t, e.range);
    br(join, e.range);
    cur_ = join;
    Operand op;
    op.kind = Operand::Kind::Var;
    op.name = var;
    op.type = t;
    return Value{op, t};
  }

  TypeRef
  common_type(const Value& a, const Value& b, const SourceRange& range)
  {
    if (is_integer(a.type) && is_integer(b.type))
      return arith_type(a.type, b.type);
    if (same_type(a.type, b.type) && is_scalar(a.type))
      return a.type;
    if (is_pointer(a.type) && b.op.is_const() && b.op.value == 0)
      return a.type;
    if (is_pointer(b.type) && a.op.is_const() && a.op.value == 0)
      return b.type;
    if (is_void_pointer(a.type) && is_pointer(b.type))
      return a.type;
    if (is_void_pointer(b.type) && is_pointer(a.type))
      return b.type;
    throw TypeError("incompatible operands to '?:'", range.begin);
  }

  Value
  conditional(const Expr& e)
  {
    int yes = new_block();
    int no = new_block();
    int join = new_block();
    lower_cond(*e.kids[0], yes, no);
    cur_ = yes;
    Value a = rvalue(*e.kids[1]);
    int yes_end = cur_;
    cur_ = no;
    Value b = rvalue(*e.kids[2]);
    int no_end = cur_;
    TypeRef t = common_type(a, b, e.range);
    std::string var = hidden("tern", t, e.range.begin);
    cur_ = yes_end;
    assign(var, convert(a, t, e.range).op, t, e.range);
    br(join, e.range);
    cur_ = no_end;
    assign(var, convert(b, t, e.range).op, t, e.range);
    br(join, e.range);
    cur_ = join;
    Operand op;
    op.kind = Operand::Kind::Var;
    op.name = var;
    op.type = t;
    return Value{op, t};
  }

  Value
  call(const Expr& e)
  {
    const Expr& callee = *e.kids[0];
    Instr ins;
    TypeRef fn_type;
    std::vector<Operand> args;
    if (callee.kind == ExprKind::Ident && !lookup_local(callee.text) && !ctx_.globals.count(callee.text))
    {
      auto proto = ctx_.protos.find(callee.text);
      if (proto == ctx_.protos.end())
        throw TypeError("call to undeclared function '" + callee.text + "'", callee.range.begin);
      ins = make(Opcode::Call, e.range);
      ins.callee = callee.text;
      fn_type = proto->second.type;
    }
    else
    {
      Value fp = rvalue(callee);
      if (!is_function_pointer(fp.type))
        throw TypeError("called object of type '" + type_str(fp.type) + "' is not a function", e.range.begin);
      ins = make(Opcode::IndirectCall, e.range);
      fn_type = fp.type->elem;
      args.push_back(fp.op);
    }
    std::size_t given = e.kids.size() - 1;
    if (given != fn_type->params.size())
      throw TypeError("call to '" + (ins.callee.empty() ? std::string("function pointer") : ins.callee) + "' expects " +
                        std::to_string(fn_type->params.size()) + " arguments, got " + std::to_string(given),
                      e.range.begin);
    for (std::size_t i = 0; i < given; ++i)
      args.push_back(convert(rvalue(*e.kids[i + 1]), fn_type->params[i], e.kids[i + 1]->range).op);
    ins.args = std::move(args);
    ins.from_type = fn_type;
    if (is_void(fn_type->elem))
    {
      ins.type = fn_type->elem;
      emit(std::move(ins));
      return Value{Operand{}, fn_type->elem};
    }
    return emit_value(std::move(ins), fn_type->elem);
  }

  // Conditions.

  void
  lower_cond(const Expr& e, int yes, int no)
  {
    if (e.kind == ExprKind::Binary && (e.text == "&&" || e.text == "||"))
    {
      int mid = new_block();
      if (e.text == "&&")
        lower_cond(*e.kids[0], mid, no);
      else
        lower_cond(*e.kids[0], yes, mid);
      cur_ = mid;
      lower_cond(*e.kids[1], yes, no);
      return;
    }
    if (e.kind == ExprKind::Unary && e.text == "!")
    {
      lower_cond(*e.kids[0], no, yes);
      return;
    }
    Value v = rvalue(e);
    if (!is_scalar(v.type))
      throw TypeError("condition must be scalar", e.range.begin);
    Operand cond = v.op;
    bool is_compare = false;
    if (v.op.is_temp())
      if (const Instr* def = fn_.temp_def(v.op.temp))
        is_compare = def->op == Opcode::Compare;
    if (!is_compare)
      cond = compare(CmpPred::Ne, v, Value{constant(0, v.type), v.type}, e.range).op;
    cbr(cond, yes, no, e.range);
  }

  // Statements.

  void
  lower_expr_stmt(const Expr& e)
  {
    discard_ = true;
    if (e.kind == ExprKind::Postfix)
      incdec(e, false);
    else
    {
      discard_ = false;
      rvalue(e);
    }
    discard_ = false;
  }

  void
  lower_decl(const Stmt& s)
  {
    TypeRef t = ctx_.resolve(*s.decl_type);
    if (is_void(t) || t->kind == TypeKind::Function)
      throw TypeError("invalid type for variable '" + s.name + "'", s.range.begin);
    if (is_array(t) && t->length == 0)
      throw TypeError("array '" + s.name + "' needs a size", s.range.begin);
    if (is_record(t))
    {
      const TypeDecl* decl = ctx_.types.record(t->record);
      if (!decl || !decl->complete)
        throw TypeError("variable '" + s.name + "' has incomplete type", s.range.begin);
    }
    Value init;
    if (s.expr)
    {
      if (!is_scalar(t))
        throw TypeError("initializers are only supported for scalar locals", s.range.begin);
      init = convert(rvalue(*s.expr), t, s.expr->range);
    }
    std::string unique = declare_local(s.name, t, s.range.begin);
    if (s.expr)
      assign(unique, init.op, t, s.range);
  }

  void
  lower_body(const Stmt& s)
  {
    scopes_.emplace_back();
    lower_stmt(s);
    scopes_.pop_back();
  }

  void
  lower_stmt(const Stmt& s)
  {
    switch (s.kind)
    {
    case StmtKind::Compound:
      scopes_.emplace_back();
      for (const auto& item : s.items)
        lower_stmt(*item);
      scopes_.pop_back();
      return;
    case StmtKind::Decl:
      lower_decl(s);
      return;
    case StmtKind::Expr:
      lower_expr_stmt(*s.expr);
      return;
    case StmtKind::Empty:
      return;
    case StmtKind::If:
    {
      int then_b = new_block();
      int else_b = s.else_branch ? new_block() : -1;
      int join = new_block();
      lower_cond(*s.cond, then_b, s.else_branch ? else_b : join);
      cur_ = then_b;
      lower_body(*s.then_branch);
      if (!terminated())
        br(join, s.range);
      if (s.else_branch)
      {
        cur_ = else_b;
        lower_body(*s.else_branch);
        if (!terminated())
          br(join, s.range);
      }
      cur_ = join;
      return;
    }
    case StmtKind::While:
    {
      int header = new_block();
      int body = new_block();
      int exit = new_block();
      br(header, s.range);
      cur_ = header;
      lower_cond(*s.cond, body, exit);
      cur_ = body;
      targets_.push_back({exit, header});
      lower_body(*s.body);
      targets_.pop_back();
      if (!terminated())
        br(header, s.range);
      cur_ = exit;
      return;
    }
    case StmtKind::For:
    {
      scopes_.emplace_back();
      if (s.init)
        lower_stmt(*s.init);
      int header = new_block();
      int body = new_block();
      int latch = new_block();
      int exit = new_block();
      br(header, s.range);
      cur_ = header;
      if (s.cond)
        lower_cond(*s.cond, body, exit);
      else
        br(body, s.range);
      cur_ = body;
      targets_.push_back({exit, latch});
      lower_body(*s.body);
      targets_.pop_back();
      if (!terminated())
        br(latch, s.range);
      cur_ = latch;
      if (s.step)
        lower_expr_stmt(*s.step);
      br(header, s.range);
      cur_ = exit;
      scopes_.pop_back();
      return;
    }
    case StmtKind::Switch:
    {
      Value v = rvalue(*s.cond);
      if (!is_integer(v.type))
        throw TypeError("switch on non-integer", s.cond->range.begin);
      Instr sw = make(Opcode::Switch, s.range);
      sw.args = {v.op};
      int sw_id = emit(std::move(sw));
      int exit = new_block();
      SwitchCtx ctx;
      switches_.push_back(&ctx);
      targets_.push_back({exit, -1});
      lower_body(*s.body);
      targets_.pop_back();
      switches_.pop_back();
      if (!terminated())
        br(exit, s.range);
      Instr& ins = fn_.instrs[static_cast<std::size_t>(sw_id)];
      ins.succ.push_back(ctx.default_block >= 0 ? ctx.default_block : exit);
      for (const auto& [value, block] : ctx.cases)
      {
        ins.case_values.push_back(value);
        ins.succ.push_back(block);
      }
      cur_ = exit;
      return;
    }
    case StmtKind::Case:
    case StmtKind::Default:
    {
      if (switches_.empty())
        throw TypeError("case label outside of switch", s.range.begin);
      SwitchCtx& ctx = *switches_.back();
      int b = new_block();
      if (!terminated())
        br(b, s.range);
      cur_ = b;
      if (s.kind == StmtKind::Default)
      {
        if (ctx.default_block >= 0)
          throw TypeError("duplicate default label", s.range.begin);
        ctx.default_block = b;
        return;
      }
      auto cv = ctx_.const_eval(*s.expr);
      if (!cv)
        throw TypeError("case label is not a constant", s.range.begin);
      if (!ctx.seen.insert(cv->value).second)
        throw TypeError("duplicate case value " + std::to_string(cv->value), s.range.begin);
      ctx.cases.emplace_back(cv->value, b);
      return;
    }
    case StmtKind::Break:
      if (targets_.empty())
        throw TypeError("break outside of loop or switch", s.range.begin);
      br(targets_.back().brk, s.range);
      return;
    case StmtKind::Continue:
    {
      for (auto it = targets_.rbegin(); it != targets_.rend(); ++it)
      {
        if (it->cont >= 0)
        {
          br(it->cont, s.range);
          return;
        }
      }
      throw TypeError("continue outside of loop", s.range.begin);
    }
    case StmtKind::Return:
    {
      Instr ret = make(Opcode::Return, s.range);
      if (s.expr)
      {
        if (is_void(fn_.return_type))
          throw TypeError("void function '" + fn_.name + "' returns a value", s.range.begin);
        ret.args = {convert(rvalue(*s.expr), fn_.return_type, s.expr->range).op};
      }
      emit(std::move(ret));
      return;
    }
    }
  }

  struct Targets
  {
    int brk;
    int cont;
  };

  struct SwitchCtx
  {
    std::vector<std::pair<std::int64_t, int>> cases;
    int default_block = -1;
    std::set<std::int64_t> seen;
  };

  Context& ctx_;
  const TopDecl& decl_;
  IRFunction fn_;
  int cur_ = 0;
  int hidden_ = 0;
  bool discard_ = false;
  std::vector<std::map<std::string, std::string>> scopes_;
  std::set<std::string> used_names_;
  std::vector<Targets> targets_;
  std::vector<SwitchCtx*> switches_;
};

bool
same_fields(const TypeDecl& a, const std::vector<FieldInfo>& fields)
{
  if (a.fields.size() != fields.size())
    return false;
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (a.fields[i].name != fields[i].name || !same_type(a.fields[i].type, fields[i].type))
      return false;
  return true;
}

} // namespace

Program
lower(const std::vector<TranslationUnit>& units)
{
  Program program;
  Context ctx{program.types, program.warnings, {}, {}, {}};
  program.modules.resize(units.size());
  std::map<std::string, std::size_t> global_home;

  // Record names first so that any file may refer to any record.
  for (std::size_t u = 0; u < units.size(); ++u)
  {
    program.modules[u].path = units[u].path;
    for (const auto& d : units[u].decls)
      if (d.kind == DeclKind::Record)
        program.types.declare_record(d.name, d.is_union, d.range.begin);
  }

  for (std::size_t u = 0; u < units.size(); ++u)
  {
    for (const auto& d : units[u].decls)
    {
      if (d.kind == DeclKind::Enum)
      {
        TypeDecl decl;
        decl.name = d.name;
        decl.kind = TypeDeclKind::Enum;
        decl.pos = d.range.begin;
        decl.complete = true;
        std::int64_t next = 0;
        std::set<std::string> seen;
        for (const auto& e : d.enumerators)
        {
          if (!seen.insert(e.name).second)
            throw TypeError("duplicate enumerator '" + e.name + "'", e.pos);
          if (e.value)
          {
            auto cv = ctx.const_eval(*e.value);
            if (!cv)
              throw TypeError("enumerator value is not constant", e.pos);
            next = cv->value;
          }
          decl.enumerators.emplace_back(e.name, wrap_to(next, int_type(32, true)));
          // Later enumerators may refer to earlier ones.
          TypeDecl partial;
          partial.pos = e.pos;
          partial.enumerators = {decl.enumerators.back()};
          program.types.add_enum(std::move(partial));
          ++next;
        }
        program.modules[u].type_names.push_back("enum " + d.name);
        program.types.add_enum(std::move(decl));
      }
      else if (d.kind == DeclKind::Typedef)
      {
        TypeDecl decl;
        decl.name = d.name;
        decl.kind = TypeDeclKind::ScalarAlias;
        decl.aliased = ctx.resolve(d.type);
        decl.pos = d.range.begin;
        decl.complete = true;
        if (program.types.record(d.name))
          throw TypeError("typedef '" + d.name + "' clashes with a record tag", d.range.begin);
        program.modules[u].type_names.push_back("typedef " + d.name);
        program.types.add_typedef(std::move(decl));
      }
    }
  }

  std::vector<std::pair<const TopDecl*, std::string>> pragma_selectors;
  for (std::size_t u = 0; u < units.size(); ++u)
  {
    for (const auto& d : units[u].decls)
    {
      if (d.kind != DeclKind::Record || d.is_forward)
        continue;
      std::vector<FieldInfo> fields;
      std::set<std::string> names;
      for (const auto& f : d.fields)
      {
        if (!names.insert(f.name).second)
          throw TypeError("duplicate field '" + f.name + "' in '" + d.name + "'", f.pos);
        TypeRef t = ctx.resolve(f.type);
        if (is_void(t) || t->kind == TypeKind::Function || (is_array(t) && t->length == 0))
          throw TypeError("invalid type for field '" + f.name + "'", f.pos);
        fields.push_back(FieldInfo{f.name, t, static_cast<int>(fields.size()), f.pos});
      }
      TypeDecl& decl = program.types.declare_record(d.name, d.is_union, d.range.begin);
      if (decl.complete)
      {
        if (!same_fields(decl, fields))
          throw TypeError("'" + d.name + "' redefined with different fields", d.range.begin);
      }
      else
      {
        decl.fields = std::move(fields);
        decl.complete = true;
        decl.pos = d.range.begin;
      }
      program.modules[u].type_names.push_back((d.is_union ? "union " : "struct ") + d.name);
      if (d.selector)
        pragma_selectors.emplace_back(&d, *d.selector);
    }
  }
  for (const auto& [d, sel] : pragma_selectors)
  {
    const FieldInfo* f = program.types.field(d->name, sel);
    if (!f || !is_integer(f->type))
      throw TypeError("selector '" + sel + "' is not a scalar field of '" + d->name + "'", d->range.begin);
    program.types.set_selector(d->name, sel);
  }
  program.types.check_recursion();

  // Globals and function signatures.
  for (std::size_t u = 0; u < units.size(); ++u)
  {
    for (const auto& d : units[u].decls)
    {
      if (d.kind == DeclKind::Function)
      {
        TypeRef t = ctx.resolve(d.type);
        if (ctx.globals.count(d.name))
          throw TypeError("'" + d.name + "' declared as both variable and function", d.range.begin);
        auto [it, inserted] = ctx.protos.emplace(d.name, Prototype{d.name, t, d.range.begin});
        if (!inserted && !same_type(it->second.type, t))
          throw TypeError("conflicting types for '" + d.name + "'", d.range.begin);
        if (d.body)
        {
          if (!ctx.defined.insert(d.name).second)
            throw TypeError("redefinition of function '" + d.name + "'", d.range.begin);
          for (const auto& p : function_params(d.type))
            if (p.name.empty())
              throw TypeError("unnamed parameter in definition of '" + d.name + "'", p.pos);
        }
      }
      else if (d.kind == DeclKind::Variable)
      {
        TypeRef t = ctx.resolve(d.type);
        if (is_void(t) || (is_array(t) && t->length == 0))
          throw TypeError("invalid type for global '" + d.name + "'", d.range.begin);
        if (ctx.protos.count(d.name))
          throw TypeError("'" + d.name + "' declared as both variable and function", d.range.begin);
        std::optional<std::int64_t> init;
        if (d.init)
        {
          auto cv = ctx.const_eval(*d.init);
          if (!cv || !is_scalar(t))
            throw TypeError("global initializer for '" + d.name + "' must be an integer constant", d.range.begin);
          init = wrap_to(cv->value, is_integer(t) ? t : int_type(64, false));
        }
        bool defines = !d.is_extern;
        auto it = ctx.globals.find(d.name);
        if (it == ctx.globals.end())
        {
          Global g;
          g.name = d.name;
          g.file = units[u].path;
          g.type = t;
          g.defined = defines;
          g.init = init;
          g.pos = d.range.begin;
          ctx.globals.emplace(d.name, g);
          global_home[d.name] = u;
          continue;
        }
        Global& g = it->second;
        if (!same_type(g.type, t))
          throw TypeError("conflicting types for global '" + d.name + "'", d.range.begin);
        if (defines)
        {
          if (g.defined && (init || g.init))
            throw TypeError("redefinition of global '" + d.name + "'", d.range.begin);
          if (!g.defined)
          {
            g.defined = true;
            g.file = units[u].path;
            g.pos = d.range.begin;
            global_home[d.name] = u;
          }
          if (init)
            g.init = init;
        }
      }
    }
  }

  for (const auto& [name, g] : ctx.globals)
    program.modules[global_home[name]].globals.push_back(g);

  for (std::size_t u = 0; u < units.size(); ++u)
  {
    std::set<std::string> listed;
    for (const auto& d : units[u].decls)
    {
      if (d.kind != DeclKind::Function)
        continue;
      if (d.body)
        program.modules[u].functions.push_back(FunctionLowerer(ctx, d, units[u].path).run());
      else if (!ctx.defined.count(d.name) && listed.insert(d.name).second)
        program.modules[u].prototypes.push_back(ctx.protos.at(d.name));
    }
  }
  program.reindex();
  return program;
}

Program
lower(TranslationUnit unit)
{
  std::vector<TranslationUnit> units;
  units.push_back(std::move(unit));
  return lower(units);
}

Program
load_program(const std::vector<SourceFile>& files)
{
  std::vector<TranslationUnit> units;
  std::set<std::string> paths;
  for (const auto& f : files)
  {
    if (!paths.insert(f.path).second)
      throw IoError("file '" + f.path + "' given more than once", SourcePos{f.path, 0, 0, 0});
    units.push_back(parse(f));
  }
  return lower(units);
}

} // namespace civ::frontend
