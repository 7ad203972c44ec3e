#include "civ/temporal/temporal.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>

namespace civ::temporal {

using boundary::ApiClass;
using frontend::Compartment;
using frontend::Instr;
using frontend::IRFunction;
using frontend::Opcode;
using frontend::Operand;
using frontend::TypeRef;
using pdg::CallSite;

std::string
to_string(TemporalKind kind)
{
  switch (kind)
  {
  case TemporalKind::Sac:
    return "SAC";
  case TemporalKind::LockNeverUnlock:
    return "lock_never_unlock";
  case TemporalKind::UnbalancedAlloc:
    return "unbalanced_alloc";
  }
  return "?";
}

std::optional<TemporalKind>
temporal_kind_from_string(const std::string& s)
{
  for (auto k : {TemporalKind::Sac, TemporalKind::LockNeverUnlock, TemporalKind::UnbalancedAlloc})
    if (to_string(k) == s)
      return k;
  return std::nullopt;
}

namespace {

std::vector<std::string>
callee_names(const pdg::ProgramGraphs& g, const IRFunction& fn, const Instr& ins)
{
  std::vector<std::string> names;
  if (ins.op == Opcode::Call)
    names.push_back(ins.callee);
  for (const auto& t : g.calls->targets(fn.name, ins.id))
    if (std::find(names.begin(), names.end(), t) == names.end())
      names.push_back(t);
  return names;
}

bool
calls(const pdg::ProgramGraphs& g, const IRFunction& fn, const Instr& ins, const std::string& name)
{
  if (!ins.is_call())
    return false;
  auto names = callee_names(g, fn, ins);
  return std::find(names.begin(), names.end(), name) != names.end();
}

/// First API entry of `c` the call may invoke.
const boundary::ApiEntry*
api_call(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec, const IRFunction& fn, const Instr& ins,
         ApiClass c)
{
  if (!ins.is_call())
    return nullptr;
  for (const auto& name : callee_names(g, fn, ins))
    if (const auto* e = spec.api(c, name))
      return e;
  return nullptr;
}

/// Calls in CFG-reachable blocks of every defined function, in program order.
void
for_each_call(const pdg::ProgramGraphs& g, const std::function<void(const IRFunction&, const Instr&)>& visit)
{
  for (const auto* fn : g.program->functions())
  {
    const auto& cfg = g.cfg(fn->name);
    for (const auto& block : fn->blocks)
    {
      if (!cfg.reachable(block.id))
        continue;
      for (int id : block.instrs)
        if (fn->instrs[static_cast<std::size_t>(id)].is_call())
          visit(*fn, fn->instrs[static_cast<std::size_t>(id)]);
    }
  }
}

int
object_position(const boundary::ApiEntry& e)
{
  return e.positions.empty() ? 0 : e.positions.front();
}

std::set<int>
lock_objects(const pdg::ProgramGraphs& g, const IRFunction& fn, const Instr& ins, const boundary::ApiEntry& e)
{
  auto args = ins.call_args();
  auto pos = static_cast<std::size_t>(object_position(e));
  if (pos >= args.size())
    return {};
  return g.pt->operand_pts(fn.name, args[pos]);
}

bool
intersects(const std::set<int>& a, const std::set<int>& b)
{
  return std::any_of(a.begin(), a.end(), [&](int x) { return b.count(x) > 0; });
}

/// Release of the lock held in `held`; unknown lock objects on either side count as a match.
bool
releases(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec, const IRFunction& fn, const Instr& ins,
         const std::set<int>& held)
{
  const auto* e = api_call(g, spec, fn, ins, ApiClass::LockRelease);
  if (!e)
    return false;
  auto objs = lock_objects(g, fn, ins, *e);
  return held.empty() || objs.empty() || intersects(objs, held);
}

class PathSearch
{
public:
  using Pred = std::function<bool(const IRFunction&, const Instr&)>;

  PathSearch(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec) : g_(g), spec_(spec) {}

  /// Breadth-first search over driver control flow from just after `start`.
  /// Stops a path at `stop`; succeeds at `goal`, or at an export's return when `to_exit`.
  std::optional<CfgWitness>
  run(const CallSite& start, const Pred& stop, const Pred& goal, bool to_exit) const
  {
    const IRFunction* fn = g_.program->find_function(start.caller);
    const Instr& first = fn->instrs[static_cast<std::size_t>(start.instr)];
    const auto& block = fn->blocks[static_cast<std::size_t>(first.block)].instrs;
    int pos = static_cast<int>(std::find(block.begin(), block.end(), start.instr) - block.begin()) + 1;

    std::vector<State> states{{start.caller, first.block, pos, -1}};
    std::set<std::tuple<std::string, int, int>> seen{{start.caller, first.block, pos}};
    std::deque<int> queue{0};
    auto push = [&](const std::string& f, int b, int p, int parent) {
      if (seen.insert({f, b, p}).second)
      {
        states.push_back({f, b, p, parent});
        queue.push_back(static_cast<int>(states.size()) - 1);
      }
    };
    while (!queue.empty())
    {
      int si = queue.front();
      queue.pop_front();
      State st = states[static_cast<std::size_t>(si)];
      const IRFunction& cur = *g_.program->find_function(st.function);
      const auto& ids = cur.blocks[static_cast<std::size_t>(st.block)].instrs;
      for (std::size_t k = static_cast<std::size_t>(st.pos); k < ids.size(); ++k)
      {
        const Instr& ins = cur.instrs[static_cast<std::size_t>(ids[k])];
        if (stop(cur, ins))
          break;
        if (goal && goal(cur, ins))
          return witness(states, si, start, {cur.name, ins.id});
        if (ins.op == Opcode::Return)
        {
          if (spec_.is_export(cur.name))
          {
            if (to_exit)
              return witness(states, si, start, {cur.name, -1});
            break;
          }
          for (const auto& site : g_.calls->callers(cur.name))
          {
            const IRFunction* caller = g_.program->find_function(site.caller);
            if (!caller || caller->compartment != Compartment::Driver)
              continue;
            const Instr& call = caller->instrs[static_cast<std::size_t>(site.instr)];
            const auto& cb = caller->blocks[static_cast<std::size_t>(call.block)].instrs;
            int next = static_cast<int>(std::find(cb.begin(), cb.end(), site.instr) - cb.begin()) + 1;
            push(caller->name, call.block, next, si);
          }
        }
        else if (ins.is_terminator())
        {
          for (int s : ins.succ)
            push(cur.name, s, 0, si);
        }
      }
    }
    return std::nullopt;
  }

private:
  struct State
  {
    std::string function;
    int block;
    int pos;
    int parent;
  };

  static CfgWitness
  witness(const std::vector<State>& states, int last, const CallSite& start, const CallSite& end)
  {
    CfgWitness w;
    for (int i = last; i >= 0; i = states[static_cast<std::size_t>(i)].parent)
      w.steps.push_back({states[static_cast<std::size_t>(i)].function, states[static_cast<std::size_t>(i)].block});
    std::reverse(w.steps.begin(), w.steps.end());
    w.start = start;
    w.end = end;
    return w;
  }

  const pdg::ProgramGraphs& g_;
  const boundary::BoundarySpec& spec_;
};

std::string
type_key(const TypeRef& t)
{
  if (!t)
    return "?";
  if (frontend::is_record(t))
    return (t->is_union ? "union " : "struct ") + t->record;
  auto plain = std::make_shared<frontend::Type>(*t);
  plain->alias.clear();
  return frontend::type_str(plain);
}

TypeRef
static_type(const IRFunction& fn, const Operand& op)
{
  if (op.type)
    return op.type;
  if (op.is_temp() && static_cast<std::size_t>(op.temp) < fn.temp_types.size())
    return fn.temp_types[static_cast<std::size_t>(op.temp)];
  if (op.is_var())
    if (const auto* v = fn.find_var(op.name))
      return v->type;
  return nullptr;
}

bool
typed_pointer(const TypeRef& t)
{
  return t && frontend::is_pointer(t) && !frontend::is_void_pointer(t) && !frontend::is_function_pointer(t);
}

bool
same_value(const Operand& a, const Operand& b)
{
  if (a.is_temp() && b.is_temp())
    return a.temp == b.temp;
  return a.is_var() && b.is_var() && a.name == b.name;
}

class TypeTracker
{
public:
  explicit TypeTracker(const pdg::ProgramGraphs& g) : g_(g) {}

  void
  forward(const IRFunction& fn, const Operand& value, std::set<std::string>& out, int depth = 0)
  {
    if (depth > 12 || !visited_.insert({fn.name, value.is_temp() ? "%" + std::to_string(value.temp) : value.name}).second)
      return;
    for (const auto& ins : fn.instrs)
    {
      bool uses = std::any_of(ins.args.begin(), ins.args.end(), [&](const Operand& a) { return same_value(a, value); });
      if (!uses)
        continue;
      switch (ins.op)
      {
      case Opcode::Cast:
      {
        std::set<std::string> further;
        Operand res;
        res.kind = Operand::Kind::Temp;
        res.temp = ins.dst;
        forward(fn, res, further, depth + 1);
        if (!further.empty())
          out.insert(further.begin(), further.end());
        else if (typed_pointer(ins.type))
          out.insert(type_key(ins.type->elem));
        break;
      }
      case Opcode::Assign:
      {
        const auto* v = fn.find_var(ins.var);
        if (v && typed_pointer(v->type))
        {
          out.insert(type_key(v->type->elem));
        }
        else
        {
          Operand var;
          var.kind = Operand::Kind::Var;
          var.name = ins.var;
          forward(fn, var, out, depth + 1);
        }
        break;
      }
      case Opcode::Return:
        if (typed_pointer(fn.return_type))
        {
          out.insert(type_key(fn.return_type->elem));
        }
        else
        {
          for (const auto& site : g_.calls->callers(fn.name))
          {
            const IRFunction* caller = g_.program->find_function(site.caller);
            const Instr& call = caller->instrs[static_cast<std::size_t>(site.instr)];
            if (call.dst < 0)
              continue;
            Operand res;
            res.kind = Operand::Kind::Temp;
            res.temp = call.dst;
            forward(*caller, res, out, depth + 1);
          }
        }
        break;
      default:
        break;
      }
    }
  }

  void
  backward(const IRFunction& fn, const Operand& value, std::set<std::string>& out, int depth = 0)
  {
    if (depth > 12)
      return;
    TypeRef t = static_type(fn, value);
    if (typed_pointer(t))
    {
      out.insert(type_key(t->elem));
      return;
    }
    if (value.is_temp())
    {
      const Instr* d = fn.temp_def(value.temp);
      if (d && d->op == Opcode::Cast)
        backward(fn, d->args[0], out, depth + 1);
      return;
    }
    if (!value.is_var())
      return;
    for (std::size_t i = 0; i < fn.params.size(); ++i)
    {
      if (fn.params[i].name != value.name)
        continue;
      for (const auto& site : g_.calls->callers(fn.name))
      {
        const IRFunction* caller = g_.program->find_function(site.caller);
        auto args = caller->instrs[static_cast<std::size_t>(site.instr)].call_args();
        if (i < args.size())
          backward(*caller, args[i], out, depth + 1);
      }
      return;
    }
    for (const auto& ins : fn.instrs)
      if (ins.op == Opcode::Assign && ins.var == value.name)
        backward(fn, ins.args[0], out, depth + 1);
  }

private:
  const pdg::ProgramGraphs& g_;
  std::set<std::pair<std::string, std::string>> visited_;
};

std::vector<std::string>
imports_in(const boundary::BoundarySpec& spec, const std::function<bool(const std::string&)>& pred)
{
  std::set<std::string> names;
  for (const auto& e : spec.kernel_imports)
    if (pred(e.name))
      names.insert(e.name);
  return {names.begin(), names.end()};
}

std::vector<CallSite>
driver_calls_to(const pdg::ProgramGraphs& g, const std::string& name)
{
  std::vector<CallSite> out;
  for_each_call(g, [&](const IRFunction& fn, const Instr& ins) {
    if (fn.compartment == Compartment::Driver && calls(g, fn, ins, name))
      out.push_back({fn.name, ins.id});
  });
  return out;
}

} // namespace

std::set<std::string>
allocated_types(const pdg::ProgramGraphs& graphs, const std::string& fn_name, int call_instr)
{
  const IRFunction& fn = *graphs.program->find_function(fn_name);
  const Instr& call = fn.instrs[static_cast<std::size_t>(call_instr)];
  std::set<std::string> out;
  if (call.dst >= 0)
  {
    Operand res;
    res.kind = Operand::Kind::Temp;
    res.temp = call.dst;
    TypeTracker(graphs).forward(fn, res, out);
  }
  if (out.empty())
    for (const auto& a : call.call_args())
      if (a.sizeof_type)
        out.insert(type_key(a.sizeof_type));
  return out;
}

std::set<std::string>
freed_types(const pdg::ProgramGraphs& graphs, const std::string& fn_name, int call_instr, int arg)
{
  const IRFunction& fn = *graphs.program->find_function(fn_name);
  auto args = fn.instrs[static_cast<std::size_t>(call_instr)].call_args();
  std::set<std::string> out;
  if (arg >= 0 && static_cast<std::size_t>(arg) < args.size())
    TypeTracker(graphs).backward(fn, args[static_cast<std::size_t>(arg)], out);
  return out;
}

std::vector<LockInstance>
shared_locks(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec,
             const boundary::InterfaceSurface& surface, const boundary::SharedFieldSet& shared)
{
  std::map<int, LockInstance> locks;
  auto instance = [&](int loc) -> LockInstance& {
    auto& l = locks[loc];
    l.location = loc;
    l.label = g.pt->describe(loc);
    return l;
  };

  for_each_call(g, [&](const IRFunction& fn, const Instr& ins) {
    bool driver = fn.compartment == Compartment::Driver;
    for (ApiClass c : {ApiClass::LockAcquire, ApiClass::SpinlockAcquire, ApiClass::LockRelease})
    {
      const auto* e = api_call(g, spec, fn, ins, c);
      if (!e)
        continue;
      for (int loc : lock_objects(g, fn, ins, *e))
      {
        auto& l = instance(loc);
        auto& sites = c == ApiClass::LockRelease ? (driver ? l.driver_releases : l.kernel_releases)
                                                 : (driver ? l.driver_acquires : l.kernel_acquires);
        if (std::find(sites.begin(), sites.end(), CallSite{fn.name, ins.id}) == sites.end())
          sites.push_back({fn.name, ins.id});
      }
    }
  });

  std::set<int> shared_cells = shared.shared_cells();
  std::set<int> interface_cells;
  for (const auto& item : shared.items)
    for (const auto& cells : item.cells)
      interface_cells.insert(cells.begin(), cells.end());
  for (const auto& name : surface.globals)
    if (int root = g.pt->global(name); root >= 0)
      for (int loc : g.pt->rooted_at(root))
        if (spec.is_lock_type(g.pt->loc(loc).type))
          instance(loc);
  for (int loc : shared_cells)
    if (spec.is_lock_type(g.pt->loc(loc).type))
      instance(loc);

  std::vector<LockInstance> out;
  for (auto& [loc, l] : locks)
  {
    int root = g.pt->root_of(loc);
    const auto& r = g.pt->loc(root);
    bool boundary_global = r.kind == pdg::LocKind::Global && surface.has_global(r.name);
    bool both_sides = (!l.kernel_acquires.empty() || !l.kernel_releases.empty()) &&
                      (!l.driver_acquires.empty() || !l.driver_releases.empty());
    l.shared = shared_cells.count(loc) || boundary_global || (interface_cells.count(loc) && both_sides);
    out.push_back(std::move(l));
  }
  return out;
}

std::size_t
shared_lock_count(const std::vector<LockInstance>& locks)
{
  return static_cast<std::size_t>(std::count_if(locks.begin(), locks.end(), [](const auto& l) { return l.shared; }));
}

std::set<std::string>
sleepable_closure(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec)
{
  std::set<std::string> out;
  auto it = spec.api_classes.find(ApiClass::Sleepable);
  if (it != spec.api_classes.end())
    for (const auto& e : it->second)
      out.insert(e.function);
  for_each_call(g, [&](const IRFunction& fn, const Instr& ins) {
    const auto* e = api_call(g, spec, fn, ins, ApiClass::Alloc);
    if (!e)
      return;
    auto args = ins.call_args();
    int pos = e->flags_position < 0 ? static_cast<int>(args.size()) - 1 : e->flags_position;
    if (pos < 0 || static_cast<std::size_t>(pos) >= args.size() || !spec.is_atomic_flag(args[static_cast<std::size_t>(pos)]))
      out.insert(fn.name);
  });
  bool changed = true;
  while (changed)
  {
    changed = false;
    for_each_call(g, [&](const IRFunction& fn, const Instr& ins) {
      if (out.count(fn.name))
        return;
      for (const auto& name : callee_names(g, fn, ins))
        if (out.count(name))
        {
          out.insert(fn.name);
          changed = true;
          return;
        }
    });
  }
  return out;
}

std::vector<TemporalFinding>
sac_pairs(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec, const std::set<std::string>& sleepable,
          bool require_witness)
{
  auto spin = imports_in(spec, [&](const std::string& f) { return spec.in_class(ApiClass::SpinlockAcquire, f); });
  auto sleepers = imports_in(spec, [&](const std::string& f) { return sleepable.count(f) > 0; });
  PathSearch search(g, spec);
  std::vector<TemporalFinding> out;
  for (const auto& s : spin)
    for (const auto& f : sleepers)
    {
      TemporalFinding finding;
      finding.kind = TemporalKind::Sac;
      finding.functions = {s, f};
      if (require_witness)
      {
        for (const auto& site : driver_calls_to(g, s))
        {
          const IRFunction& fn = *g.program->find_function(site.caller);
          const Instr& acq = fn.instrs[static_cast<std::size_t>(site.instr)];
          std::set<int> held;
          if (const auto* e = api_call(g, spec, fn, acq, ApiClass::SpinlockAcquire))
            held = lock_objects(g, fn, acq, *e);
          finding.witness = search.run(
            site, [&](const IRFunction& f2, const Instr& i2) { return releases(g, spec, f2, i2, held); },
            [&](const IRFunction& f2, const Instr& i2) { return calls(g, f2, i2, f); }, false);
          if (finding.witness)
            break;
        }
        if (!finding.witness)
          continue;
      }
      out.push_back(std::move(finding));
    }
  return out;
}

std::vector<TemporalFinding>
lock_unlock_pairs(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec,
                  const std::vector<LockInstance>& locks, bool require_witness)
{
  std::set<int> shared;
  for (const auto& l : locks)
    if (l.shared)
      shared.insert(l.location);

  struct Site
  {
    CallSite site;
    std::string api;
    std::set<int> objects;
  };
  std::vector<Site> acquires;
  std::vector<Site> releases_;
  for_each_call(g, [&](const IRFunction& fn, const Instr& ins) {
    if (fn.compartment != Compartment::Driver)
      return;
    for (ApiClass c : {ApiClass::LockAcquire, ApiClass::SpinlockAcquire, ApiClass::LockRelease})
      if (const auto* e = api_call(g, spec, fn, ins, c))
      {
        Site s{{fn.name, ins.id}, e->function, {}};
        for (int loc : lock_objects(g, fn, ins, *e))
          if (shared.count(loc))
            s.objects.insert(loc);
        if (s.objects.empty())
          continue;
        (c == ApiClass::LockRelease ? releases_ : acquires).push_back(std::move(s));
        break;
      }
  });

  PathSearch search(g, spec);
  std::vector<TemporalFinding> out;
  for (const auto& a : acquires)
  {
    std::optional<CfgWitness> bypass;
    if (require_witness)
    {
      bypass = search.run(
        a.site, [&](const IRFunction& f, const Instr& i) { return releases(g, spec, f, i, a.objects); }, nullptr, true);
      if (!bypass)
        continue;
    }
    for (const auto& r : releases_)
    {
      std::vector<int> common;
      std::set_intersection(a.objects.begin(), a.objects.end(), r.objects.begin(), r.objects.end(),
                            std::back_inserter(common));
      if (common.empty())
        continue;
      TemporalFinding finding;
      finding.kind = TemporalKind::LockNeverUnlock;
      finding.functions = {a.api, r.api};
      finding.sites = {a.site, r.site};
      finding.detail = g.pt->describe(common.front());
      finding.witness = bypass;
      out.push_back(std::move(finding));
    }
  }
  return out;
}

std::vector<TemporalFinding>
alloc_dealloc_pairs(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec, bool require_witness)
{
  // Types each import allocates or frees, through everything it may call.
  auto types_of = [&](const std::string& name, ApiClass c) {
    std::set<std::string> types;
    std::set<std::string> scope;
    if (g.program->find_function(name))
      scope = g.calls->reachable_from(name);
    bool is_api = spec.in_class(c, name);
    for_each_call(g, [&](const IRFunction& fn, const Instr& ins) {
      const auto* e = api_call(g, spec, fn, ins, c);
      if (!e)
        return;
      bool in_scope = scope.count(fn.name) || (is_api && calls(g, fn, ins, name));
      if (!in_scope)
        return;
      auto t = c == ApiClass::Alloc ? allocated_types(g, fn.name, ins.id)
                                    : freed_types(g, fn.name, ins.id, object_position(*e));
      types.insert(t.begin(), t.end());
    });
    return types;
  };

  auto allocators = imports_in(spec, [](const std::string&) { return true; });
  std::map<std::string, std::set<std::string>> alloc_types;
  std::map<std::string, std::set<std::string>> free_types;
  for (const auto& name : allocators)
  {
    alloc_types[name] = types_of(name, ApiClass::Alloc);
    free_types[name] = types_of(name, ApiClass::Dealloc);
  }

  PathSearch search(g, spec);
  std::vector<TemporalFinding> out;
  for (const auto& a : allocators)
    for (const auto& d : allocators)
    {
      if (a == d)
        continue;
      std::vector<std::string> common;
      std::set_intersection(alloc_types[a].begin(), alloc_types[a].end(), free_types[d].begin(), free_types[d].end(),
                            std::back_inserter(common));
      if (common.empty())
        continue;
      TemporalFinding finding;
      finding.kind = TemporalKind::UnbalancedAlloc;
      finding.functions = {a, d};
      finding.detail = common.front();
      if (require_witness)
      {
        for (const auto& site : driver_calls_to(g, a))
        {
          finding.witness = search.run(
            site, [&](const IRFunction& f, const Instr& i) { return calls(g, f, i, d); }, nullptr, true);
          if (finding.witness)
          {
            finding.sites = {site};
            break;
          }
        }
        if (!finding.witness)
          continue;
      }
      out.push_back(std::move(finding));
    }
  return out;
}

TemporalResults
analyze_temporal(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                 const boundary::InterfaceSurface& surface, const boundary::SharedFieldSet& shared)
{
  TemporalResults r;
  r.locks = shared_locks(graphs, spec, surface, shared);
  r.sleepable = sleepable_closure(graphs, spec);
  for (bool witness : {false, true})
  {
    auto& dst = witness ? r.cfi : r.baseline;
    for (auto& f : sac_pairs(graphs, spec, r.sleepable, witness))
      dst.push_back(std::move(f));
    for (auto& f : lock_unlock_pairs(graphs, spec, r.locks, witness))
      dst.push_back(std::move(f));
    for (auto& f : alloc_dealloc_pairs(graphs, spec, witness))
      dst.push_back(std::move(f));
  }
  return r;
}

} // namespace civ::temporal
