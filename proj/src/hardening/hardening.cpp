#include "civ/hardening/hardening.hpp"

#include <algorithm>
#include <map>

namespace civ::hardening {

using frontend::Compartment;
using frontend::Instr;
using frontend::IRFunction;
using frontend::Opcode;
using frontend::Operand;

Mode
make_mode(ModeName name)
{
  Mode m;
  m.name = name;
  m.enforced_properties = {"P1", "P2", "P3-partial", "P4"};
  if (name != ModeName::Baseline)
    m.enforced_properties.push_back("P5");
  if (name == ModeName::MemsafeP6)
    m.enforced_properties.push_back("P6");
  return m;
}

std::string
to_string(ModeName name)
{
  switch (name)
  {
  case ModeName::Baseline:
    return "baseline";
  case ModeName::CfiP5:
    return "cfi_p5";
  case ModeName::MemsafeP6:
    return "memsafe_p6";
  }
  return "?";
}

std::optional<ModeName>
mode_from_string(const std::string& s)
{
  if (s == "baseline")
    return ModeName::Baseline;
  if (s == "cfi" || s == "cfi_p5")
    return ModeName::CfiP5;
  if (s == "memsafe" || s == "memsafe_p6")
    return ModeName::MemsafeP6;
  return std::nullopt;
}

std::string
to_string(Reason r)
{
  switch (r)
  {
  case Reason::DirectDriverWrite:
    return "direct-driver-write";
  case Reason::UnsafeIndexWrite:
    return "unsafe-index-write";
  case Reason::UnsafePointerArithWrite:
    return "unsafe-pointer-arith-write";
  case Reason::CastAliasedWrite:
    return "cast-aliased-write";
  }
  return "?";
}

bool
ObjectSafety::has(Reason r) const
{
  return std::find(reasons.begin(), reasons.end(), r) != reasons.end();
}

namespace {

std::string
pointee_key(const frontend::TypeRef& t)
{
  if (!t || !frontend::is_pointer(t) || !t->elem)
    return {};
  if (frontend::is_record(t->elem))
    return t->elem->record;
  auto plain = std::make_shared<frontend::Type>(*t->elem);
  plain->alias.clear();
  return frontend::type_str(plain);
}

class StoreClassifier
{
public:
  StoreClassifier(const pdg::ProgramGraphs& g, const IRFunction& fn) : g_(g), fn_(fn) {}

  /// How a store address was computed.
  std::set<Reason>
  classify(const Operand& addr)
  {
    std::set<Reason> out;
    walk(addr, out, 0);
    if (out.empty())
      out.insert(Reason::DirectDriverWrite);
    return out;
  }

private:
  /// Declared length of the array an index base points into, or -1.
  std::int64_t
  array_length(const Operand& base) const
  {
    const Instr* d = base.is_temp() ? fn_.temp_def(base.temp) : nullptr;
    if (!d)
      return -1;
    frontend::TypeRef t;
    if (d->op == Opcode::FieldAddr)
    {
      if (const auto* f = g_.program->types.field(d->record, d->field))
        t = f->type;
    }
    else if (d->op == Opcode::AddrOf)
    {
      const Operand& a = d->args[0];
      if (a.kind == Operand::Kind::Global)
      {
        if (const auto* gl = g_.program->find_global(a.name))
          t = gl->type;
      }
      else if (const auto* v = fn_.find_var(a.name))
      {
        t = v->type;
      }
    }
    return t && frontend::is_array(t) ? t->length : -1;
  }

  void
  walk(const Operand& op, std::set<Reason>& out, int depth)
  {
    if (depth > 16)
      return;
    if (op.is_var())
    {
      if (!seen_vars_.insert(op.name).second)
        return;
      for (const auto& ins : fn_.instrs)
        if (ins.op == Opcode::Assign && ins.var == op.name)
          walk(ins.args[0], out, depth + 1);
      return;
    }
    const Instr* d = op.is_temp() ? fn_.temp_def(op.temp) : nullptr;
    if (!d)
      return;
    switch (d->op)
    {
    case Opcode::Index:
    {
      std::int64_t len = array_length(d->args[0]);
      const Operand& idx = d->args[1];
      if (!idx.is_const() || len < 0 || idx.value < 0 || idx.value >= len)
        out.insert(Reason::UnsafeIndexWrite);
      walk(d->args[0], out, depth + 1);
      break;
    }
    case Opcode::PtrArith:
      out.insert(Reason::UnsafePointerArithWrite);
      walk(d->args[0], out, depth + 1);
      break;
    case Opcode::Cast:
    {
      auto from = pointee_key(d->from_type);
      auto to = pointee_key(d->type);
      bool generic = frontend::is_void_pointer(d->from_type) || frontend::is_void_pointer(d->type);
      if (!from.empty() && !to.empty() && from != to && !generic)
        out.insert(Reason::CastAliasedWrite);
      walk(d->args[0], out, depth + 1);
      break;
    }
    case Opcode::FieldAddr:
      walk(d->args[0], out, depth + 1);
      break;
    default:
      break;
    }
  }

  const pdg::ProgramGraphs& g_;
  const IRFunction& fn_;
  std::set<std::string> seen_vars_;
};

} // namespace

std::vector<ObjectSafety>
classify_safe_objects(const pdg::ProgramGraphs& g, const boundary::SharedFieldSet& shared)
{
  std::map<int, std::set<Reason>> reasons;
  for (int loc : shared.shared_cells())
    reasons[loc];
  for (const auto* fn : g.program->functions())
  {
    if (fn->compartment != Compartment::Driver)
      continue;
    const auto& cfg = g.cfg(fn->name);
    for (const auto& ins : fn->instrs)
    {
      if (ins.op != Opcode::Store || !cfg.reachable(ins.block))
        continue;
      std::set<int> hit;
      for (int loc : g.pt->operand_pts(fn->name, ins.args[0]))
        if (reasons.count(loc))
          hit.insert(loc);
      if (hit.empty())
        continue;
      auto why = StoreClassifier(g, *fn).classify(ins.args[0]);
      for (int loc : hit)
        reasons[loc].insert(why.begin(), why.end());
    }
  }
  std::vector<ObjectSafety> out;
  for (const auto& [loc, why] : reasons)
  {
    ObjectSafety s;
    s.location = loc;
    s.label = g.pt->describe(loc);
    s.reasons.assign(why.begin(), why.end());
    s.safe = std::all_of(why.begin(), why.end(), [](Reason r) { return r == Reason::DirectDriverWrite; });
    out.push_back(std::move(s));
  }
  return out;
}

bool
source_survives(const taint::TaintSource& source, ModeName mode, const std::vector<ObjectSafety>& safety)
{
  if (mode == ModeName::Baseline || source.cells.empty())
    return true;
  for (const auto& s : safety)
  {
    if (!source.cells.count(s.location))
      continue;
    if (s.has(Reason::DirectDriverWrite))
      return true;
    if (mode == ModeName::CfiP5 && !s.safe)
      return true;
  }
  return false;
}

Findings
apply_mode(const Findings& findings, ModeName mode, const std::vector<ObjectSafety>& safety,
           const std::vector<temporal::TemporalFinding>* p5_temporal)
{
  if (mode == ModeName::Baseline)
    return findings;
  if (!p5_temporal)
    throw ModeError("mode " + to_string(mode) + " needs driver control-flow witnesses, which were not computed");
  Findings out;
  for (const auto& t : findings.traces)
    if (source_survives(t.source, mode, safety))
      out.traces.push_back(t);
  out.temporal = *p5_temporal;
  return out;
}

} // namespace civ::hardening
