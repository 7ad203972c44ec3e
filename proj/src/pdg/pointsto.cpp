#include "civ/pdg/pointsto.hpp"

namespace civ::pdg {

using namespace frontend;

namespace {

enum KeyTag
{
  kVar,
  kTemp,
  kGlobal,
  kFunc,
  kRet,
  kAlloc,
  kField,
  kPlaceholder,
};

} // namespace

PointsTo::PointsTo(const Program& program, const CallGraph& calls) : program_(program)
{
  for (const Global* g : program.globals())
  {
    int id = make_global(*g);
    seed(id, g->type, g->name, g->name, {});
  }
  for (const IRFunction* fn : program.functions())
  {
    for (const auto& p : fn->params)
    {
      int id = make_var(fn->name, p.name, p.type);
      seed(id, p.type, fn->name, p.name, {});
    }
  }
  for (const IRFunction* fn : program.functions())
    generate(*fn, calls);
  solve();
}

int
PointsTo::intern(AbsLoc loc, const std::tuple<int, std::string, std::string, int, int, std::string>& key)
{
  auto it = index_.find(key);
  if (it != index_.end())
    return it->second;
  int id = static_cast<int>(locs_.size());
  locs_.push_back(std::move(loc));
  pts_.emplace_back();
  index_.emplace(key, id);
  return id;
}

int
PointsTo::make_var(const std::string& fn, const std::string& name, TypeRef type)
{
  AbsLoc l;
  l.kind = LocKind::Var;
  l.function = fn;
  l.name = name;
  l.type = std::move(type);
  l.label = fn + "::" + name;
  return intern(std::move(l), {kVar, fn, name, 0, 0, ""});
}

int
PointsTo::make_temp(const std::string& fn, int t, TypeRef type)
{
  AbsLoc l;
  l.kind = LocKind::Temp;
  l.function = fn;
  l.temp = t;
  l.type = std::move(type);
  l.label = fn + "::%" + std::to_string(t);
  return intern(std::move(l), {kTemp, fn, "", t, 0, ""});
}

int
PointsTo::make_global(const Global& g)
{
  AbsLoc l;
  l.kind = LocKind::Global;
  l.name = g.name;
  l.type = g.type;
  l.label = "@" + g.name;
  return intern(std::move(l), {kGlobal, "", g.name, 0, 0, ""});
}

int
PointsTo::make_func(const std::string& name)
{
  AbsLoc l;
  l.kind = LocKind::Func;
  l.name = name;
  l.label = "&" + name;
  return intern(std::move(l), {kFunc, "", name, 0, 0, ""});
}

int
PointsTo::make_ret(const std::string& fn, TypeRef type)
{
  AbsLoc l;
  l.kind = LocKind::Ret;
  l.function = fn;
  l.type = std::move(type);
  l.label = "ret(" + fn + ")";
  return intern(std::move(l), {kRet, fn, "", 0, 0, ""});
}

int
PointsTo::make_alloc(const std::string& fn, int instr, TypeRef type)
{
  AbsLoc l;
  l.kind = LocKind::Alloc;
  l.function = fn;
  l.instr = instr;
  l.type = std::move(type);
  l.label = "alloc(" + fn + "#" + std::to_string(instr) + ")";
  return intern(std::move(l), {kAlloc, fn, "", instr, 0, ""});
}

int
PointsTo::make_field(int base, const std::string& record, const std::string& field_name)
{
  if (locs_[static_cast<std::size_t>(base)].depth >= kMaxFieldDepth)
    return base;
  auto key = std::make_tuple(int{kField}, record, field_name, base, 0, std::string());
  auto it = index_.find(key);
  if (it != index_.end())
    return it->second;
  AbsLoc l;
  l.kind = LocKind::Field;
  l.base = base;
  l.record = record;
  l.field = field_name;
  l.depth = locs_[static_cast<std::size_t>(base)].depth + 1;
  if (const FieldInfo* f = program_.types.field(record, field_name))
    l.type = f->type;
  l.function = locs_[static_cast<std::size_t>(base)].function;
  l.label = locs_[static_cast<std::size_t>(base)].label + "." + record + "::" + field_name;
  return intern(std::move(l), key);
}

int
PointsTo::make_placeholder(const std::string& owner, const std::string& path, TypeRef type)
{
  AbsLoc l;
  l.kind = LocKind::Placeholder;
  l.function = owner;
  l.name = path;
  l.type = std::move(type);
  l.label = "obj(" + owner + ":" + path + ")";
  return intern(std::move(l), {kPlaceholder, owner, path, 0, 0, ""});
}

void
PointsTo::seed(int holder, const TypeRef& type, const std::string& owner, const std::string& path,
               std::set<std::string> seen_records)
{
  TypeRef t = strip_arrays(type);
  if (is_record(t))
  {
    if (!seen_records.insert(t->record).second)
      return;
    const TypeDecl* decl = program_.types.record(t->record);
    if (!decl)
      return;
    for (const auto& f : decl->fields)
    {
      TypeRef ft = strip_arrays(f.type);
      if (!is_pointer(ft) && !is_record(ft))
        continue;
      int cell = make_field(holder, t->record, f.name);
      if (cell != holder)
        seed(cell, f.type, owner, path + "." + f.name, seen_records);
    }
    return;
  }
  if (!is_pointer(t) || is_function_pointer(t))
    return;
  TypeRef pointee = strip_arrays(t->elem);
  if (is_record(pointee) && seen_records.count(pointee->record))
    return;
  int obj = make_placeholder(owner, path + "->*", t->elem);
  pts_[static_cast<std::size_t>(holder)].insert(obj);
  if (is_pointer(pointee) || is_record(pointee))
    seed(obj, pointee, owner, path + "->*", seen_records);
}

int
PointsTo::operand_loc(const std::string& fn, const Operand& op)
{
  switch (op.kind)
  {
  case Operand::Kind::Var:
  {
    const IRFunction* f = program_.find_function(fn);
    const Variable* v = f ? f->find_var(op.name) : nullptr;
    return make_var(fn, op.name, v ? v->type : op.type);
  }
  case Operand::Kind::Temp:
    return make_temp(fn, op.temp, op.type);
  default:
    return -1;
  }
}

void
PointsTo::generate(const IRFunction& fn, const CallGraph& calls)
{
  const std::string& f = fn.name;
  for (const auto& v : fn.locals)
    make_var(f, v.name, v.type);
  int ret_loc = make_ret(f, fn.return_type);
  auto add = [this](Constraint::Kind k, int dst, int src, std::string rec = {}, std::string fld = {}) {
    if (dst >= 0 && src >= 0)
      constraints_.push_back(Constraint{k, dst, src, std::move(rec), std::move(fld)});
  };
  for (const auto& ins : fn.instrs)
  {
    int dst = ins.dst >= 0 ? make_temp(f, ins.dst, ins.type) : -1;
    switch (ins.op)
    {
    case Opcode::AddrOf:
    {
      const Operand& target = ins.args[0];
      int obj = -1;
      if (target.kind == Operand::Kind::Var)
        obj = operand_loc(f, target);
      else if (target.kind == Operand::Kind::Global)
        obj = global(target.name);
      else if (target.kind == Operand::Kind::Func)
        obj = make_func(target.name);
      add(Constraint::Kind::Addr, dst, obj);
      break;
    }
    case Opcode::FieldAddr:
      add(Constraint::Kind::Field, dst, operand_loc(f, ins.args[0]), ins.record, ins.field);
      break;
    case Opcode::Index:
    case Opcode::PtrArith:
    case Opcode::Cast:
      add(Constraint::Kind::Copy, dst, operand_loc(f, ins.args[0]));
      break;
    case Opcode::Load:
      add(Constraint::Kind::Load, dst, operand_loc(f, ins.args[0]));
      break;
    case Opcode::Store:
      add(Constraint::Kind::Store, operand_loc(f, ins.args[0]), operand_loc(f, ins.args[1]));
      break;
    case Opcode::Assign:
      add(Constraint::Kind::Copy, make_var(f, ins.var, ins.type), operand_loc(f, ins.args[0]));
      break;
    case Opcode::Return:
      if (!ins.args.empty())
        add(Constraint::Kind::Copy, ret_loc, operand_loc(f, ins.args[0]));
      break;
    case Opcode::Call:
    case Opcode::IndirectCall:
    {
      const auto& targets = calls.targets(f, ins.id);
      std::vector<Operand> args = ins.call_args();
      for (const auto& t : targets)
      {
        const IRFunction* callee = program_.find_function(t);
        for (std::size_t i = 0; i < args.size() && i < callee->params.size(); ++i)
          add(Constraint::Kind::Copy, make_var(t, callee->params[i].name, callee->params[i].type),
              operand_loc(f, args[i]));
        if (dst >= 0)
          add(Constraint::Kind::Copy, dst, make_ret(t, callee->return_type));
      }
      if (targets.empty() && dst >= 0 && is_pointer(ins.type))
      {
        // Memory handed out by code outside the analyzed set: one object per call site.
        add(Constraint::Kind::Addr, dst, make_alloc(f, ins.id, ins.type->elem));
      }
      break;
    }
    default:
      break;
    }
  }
}

void
PointsTo::solve()
{
  bool changed = true;
  while (changed)
  {
    changed = false;
    for (std::size_t c = 0; c < constraints_.size(); ++c)
    {
      Constraint k = constraints_[c];
      auto& dst = pts_[static_cast<std::size_t>(k.dst)];
      std::size_t before = dst.size();
      switch (k.kind)
      {
      case Constraint::Kind::Addr:
        dst.insert(k.src);
        break;
      case Constraint::Kind::Copy:
      {
        std::set<int> src = pts_[static_cast<std::size_t>(k.src)];
        pts_[static_cast<std::size_t>(k.dst)].insert(src.begin(), src.end());
        break;
      }
      case Constraint::Kind::Load:
      {
        std::set<int> objs = pts_[static_cast<std::size_t>(k.src)];
        for (int o : objs)
        {
          std::set<int> content = pts_[static_cast<std::size_t>(o)];
          pts_[static_cast<std::size_t>(k.dst)].insert(content.begin(), content.end());
        }
        break;
      }
      case Constraint::Kind::Store:
      {
        std::set<int> objs = pts_[static_cast<std::size_t>(k.dst)];
        std::set<int> value = pts_[static_cast<std::size_t>(k.src)];
        for (int o : objs)
        {
          auto& cell = pts_[static_cast<std::size_t>(o)];
          std::size_t n = cell.size();
          cell.insert(value.begin(), value.end());
          changed = changed || cell.size() != n;
        }
        break;
      }
      case Constraint::Kind::Field:
      {
        std::set<int> objs = pts_[static_cast<std::size_t>(k.src)];
        std::vector<int> fields;
        for (int o : objs)
          if (locs_[static_cast<std::size_t>(o)].kind != LocKind::Func)
            fields.push_back(make_field(o, k.record, k.field));
        pts_[static_cast<std::size_t>(k.dst)].insert(fields.begin(), fields.end());
        break;
      }
      }
      if (pts_[static_cast<std::size_t>(k.dst)].size() != before)
        changed = true;
    }
  }
}

int
PointsTo::var(const std::string& fn, const std::string& name) const
{
  auto it = index_.find({kVar, fn, name, 0, 0, ""});
  return it == index_.end() ? -1 : it->second;
}

int
PointsTo::temp(const std::string& fn, int t) const
{
  auto it = index_.find({kTemp, fn, "", t, 0, ""});
  return it == index_.end() ? -1 : it->second;
}

int
PointsTo::global(const std::string& name) const
{
  auto it = index_.find({kGlobal, "", name, 0, 0, ""});
  return it == index_.end() ? -1 : it->second;
}

int
PointsTo::func(const std::string& name) const
{
  auto it = index_.find({kFunc, "", name, 0, 0, ""});
  return it == index_.end() ? -1 : it->second;
}

int
PointsTo::ret(const std::string& fn) const
{
  auto it = index_.find({kRet, fn, "", 0, 0, ""});
  return it == index_.end() ? -1 : it->second;
}

int
PointsTo::field(int base, const std::string& record, const std::string& field_name) const
{
  if (base < 0)
    return -1;
  if (locs_[static_cast<std::size_t>(base)].depth >= kMaxFieldDepth)
    return base;
  auto it = index_.find({kField, record, field_name, base, 0, ""});
  return it == index_.end() ? -1 : it->second;
}

int
PointsTo::value_loc(const std::string& fn, const Operand& op) const
{
  if (op.kind == Operand::Kind::Var)
    return var(fn, op.name);
  if (op.kind == Operand::Kind::Temp)
    return temp(fn, op.temp);
  return -1;
}

std::set<int>
PointsTo::operand_pts(const std::string& fn, const Operand& op) const
{
  int l = value_loc(fn, op);
  return l < 0 ? std::set<int>{} : pts(l);
}

int
PointsTo::root_of(int id) const
{
  while (locs_[static_cast<std::size_t>(id)].kind == LocKind::Field)
    id = locs_[static_cast<std::size_t>(id)].base;
  return id;
}

std::vector<int>
PointsTo::rooted_at(int root) const
{
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(locs_.size()); ++i)
    if (root_of(i) == root)
      out.push_back(i);
  return out;
}

} // namespace civ::pdg
