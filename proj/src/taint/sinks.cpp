#include "civ/taint/taint.hpp"

#include <algorithm>

namespace civ::taint {

using frontend::ArithOp;
using frontend::Compartment;
using frontend::Instr;
using frontend::IRFunction;
using frontend::Opcode;
using frontend::Operand;
using pdg::EdgeKind;
using pdg::NodeKind;

namespace {

class SinkClassifier
{
public:
  SinkClassifier(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec) : g_(g), spec_(spec) {}

  std::vector<SinkDescriptor>
  run()
  {
    for (const auto* fn : g_.program->functions())
      if (fn->compartment == Compartment::Kernel)
        function(*fn);
    for (std::size_t i = 0; i < out_.size(); ++i)
      out_[i].id = static_cast<int>(i);
    return std::move(out_);
  }

private:
  /// Nodes defining the value of operand `op` used by instruction `ins`.
  std::vector<int>
  feeders(const IRFunction& fn, const Instr& ins, const Operand& op) const
  {
    std::vector<int> out;
    if (op.is_temp())
    {
      if (int n = g_.pdg->temp_def_node(fn.name, op.temp); n >= 0)
        out.push_back(n);
      return out;
    }
    if (!op.is_var())
      return out;
    int param = -1;
    for (std::size_t i = 0; i < fn.params.size(); ++i)
      if (fn.params[i].name == op.name)
        param = static_cast<int>(i);
    int node = g_.pdg->instr_node(fn.name, ins.id);
    for (int e : g_.pdg->in_edges(node))
    {
      const auto& edge = g_.pdg->edges()[static_cast<std::size_t>(e)];
      if (edge.kind != EdgeKind::DataDep)
        continue;
      const auto& src = g_.pdg->node(edge.src);
      if (src.function != fn.name)
        continue;
      bool defines = false;
      if (src.kind == NodeKind::Instr)
      {
        const auto& def = fn.instrs[static_cast<std::size_t>(src.instr)];
        defines = def.op == Opcode::Assign && def.var == op.name;
      }
      else if (src.kind == NodeKind::FormalIn)
      {
        defines = src.slot == param && src.tree_node == 0;
      }
      if (defines)
        out.push_back(edge.src);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  const Instr*
  def_of(const IRFunction& fn, const Operand& op) const
  {
    return op.is_temp() ? fn.temp_def(op.temp) : nullptr;
  }

  /// Address whose base chain does not start at a fixed `&x`.
  bool
  taintable_address(const IRFunction& fn, const Operand& op) const
  {
    const Instr* d = def_of(fn, op);
    while (d)
    {
      switch (d->op)
      {
      case Opcode::AddrOf:
        return false;
      case Opcode::FieldAddr:
      case Opcode::Index:
      case Opcode::PtrArith:
      case Opcode::Cast:
        if (d->args[0].is_temp())
        {
          d = def_of(fn, d->args[0]);
          continue;
        }
        return !d->args[0].is_const() && d->args[0].kind != Operand::Kind::Global;
      default:
        return true;
      }
    }
    return op.is_var();
  }

  void
  add(CivClass c, const IRFunction& fn, const Instr& ins, std::string role, std::string kind, std::vector<int> triggers,
      bool control_hop = false)
  {
    SinkDescriptor s;
    s.civ_class = c;
    s.node = g_.pdg->instr_node(fn.name, ins.id);
    s.function = fn.name;
    s.operand_role = std::move(role);
    s.kind = std::move(kind);
    s.triggers = std::move(triggers);
    s.control_hop = control_hop;
    out_.push_back(std::move(s));
  }

  static std::vector<int>
  merge(std::vector<int> a, const std::vector<int>& b)
  {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
  }

  static bool
  is_char_buffer(const frontend::TypeRef& t)
  {
    if (!t || !(frontend::is_pointer(t) || frontend::is_array(t)))
      return false;
    auto elem = frontend::strip_arrays(t->elem);
    return elem && frontend::is_integer(elem) && elem->bits == 8;
  }

  frontend::TypeRef
  operand_type(const IRFunction& fn, const Operand& op) const
  {
    if (op.type)
      return op.type;
    if (op.is_temp() && op.temp >= 0 && static_cast<std::size_t>(op.temp) < fn.temp_types.size())
      return fn.temp_types[static_cast<std::size_t>(op.temp)];
    if (op.is_var())
      if (const auto* v = fn.find_var(op.name))
        return v->type;
    return nullptr;
  }

  std::vector<std::string>
  callee_names(const IRFunction& fn, const Instr& ins) const
  {
    std::vector<std::string> names;
    if (ins.op == Opcode::Call)
      names.push_back(ins.callee);
    for (const auto& t : g_.calls->targets(fn.name, ins.id))
      if (std::find(names.begin(), names.end(), t) == names.end())
        names.push_back(t);
    return names;
  }

  void
  call(const IRFunction& fn, const Instr& ins)
  {
    auto args = ins.call_args();
    for (const auto& name : callee_names(fn, ins))
    {
      if (const auto* e = spec_.api(boundary::ApiClass::SensitiveApi, name))
      {
        std::vector<int> positions = e->positions;
        if (positions.empty())
          for (std::size_t i = 0; i < args.size(); ++i)
            positions.push_back(static_cast<int>(i));
        for (int p : positions)
          if (p >= 0 && static_cast<std::size_t>(p) < args.size())
            add(CivClass::MEM4, fn, ins, "arg" + std::to_string(p), "call:" + name,
                feeders(fn, ins, args[static_cast<std::size_t>(p)]));
      }
      if (const auto* e = spec_.api(boundary::ApiClass::StringApi, name))
      {
        for (std::size_t i = 0; i < args.size(); ++i)
        {
          if (!e->positions.empty() &&
              std::find(e->positions.begin(), e->positions.end(), static_cast<int>(i)) == e->positions.end())
            continue;
          if (is_char_buffer(operand_type(fn, args[i])))
            add(CivClass::MEM5, fn, ins, "arg" + std::to_string(i), "call:" + name, feeders(fn, ins, args[i]));
        }
      }
    }
  }

  /// Condition of `ins` depends, within the function, on a load of `owner.field`.
  bool
  tests_selector(const IRFunction& fn, const Instr& ins, const std::string& owner, const std::string& field) const
  {
    std::vector<int> work{g_.pdg->instr_node(fn.name, ins.id)};
    std::set<int> seen(work.begin(), work.end());
    while (!work.empty())
    {
      int n = work.back();
      work.pop_back();
      const auto& node = g_.pdg->node(n);
      if (node.kind != NodeKind::Instr || node.function != fn.name)
        continue;
      const Instr& cur = fn.instrs[static_cast<std::size_t>(node.instr)];
      if (cur.op == Opcode::Load)
        if (const Instr* a = def_of(fn, cur.args[0]); a && a->op == Opcode::FieldAddr && a->record == owner &&
                                                         a->field == field)
          return true;
      for (int e : g_.pdg->in_edges(n))
      {
        const auto& edge = g_.pdg->edges()[static_cast<std::size_t>(e)];
        if (edge.kind == EdgeKind::DataDep && seen.insert(edge.src).second)
          work.push_back(edge.src);
      }
    }
    return false;
  }

  void
  union_access(const IRFunction& fn, const Instr& ins, const pdg::Cfg& cfg)
  {
    const auto* decl = g_.program->types.record(ins.record);
    if (!decl || decl->kind != frontend::TypeDeclKind::Union || !decl->selector_field)
      return;
    const std::string& owner = decl->selector_owner;
    const std::string& sel = *decl->selector_field;
    if (owner == ins.record && ins.field == sel)
      return;
    for (int c : cfg.controllers[static_cast<std::size_t>(ins.block)])
    {
      const Instr& guard = fn.terminator(c);
      if (guard.args.empty() || !tests_selector(fn, guard, owner, sel))
        continue;
      add(CivClass::MEM3, fn, ins, "selector", "union-access:" + ins.record + "." + ins.field,
          {g_.pdg->instr_node(fn.name, guard.id)}, true);
    }
  }

  /// Variables an operand's value is computed from, through arithmetic and casts.
  std::set<std::string>
  vars_of(const IRFunction& fn, const Operand& op, int depth = 0) const
  {
    std::set<std::string> out;
    if (op.is_var())
      out.insert(op.name);
    const Instr* d = def_of(fn, op);
    if (!d || depth > 16)
      return out;
    if (d->op == Opcode::Arith || d->op == Opcode::Cast || d->op == Opcode::Compare)
      for (const auto& a : d->args)
      {
        auto s = vars_of(fn, a, depth + 1);
        out.insert(s.begin(), s.end());
      }
    return out;
  }

  void
  roots_of_pts(const IRFunction& fn, const Operand& op, std::set<int>& out) const
  {
    for (int l : g_.pt->operand_pts(fn.name, op))
      out.insert(g_.pt->root_of(l));
  }

  /// Objects that hold, or are reached through, an operand's value.
  std::set<int>
  container_roots(const IRFunction& fn, const Operand& op, int depth = 0) const
  {
    std::set<int> out;
    roots_of_pts(fn, op, out);
    const Instr* d = def_of(fn, op);
    if (!d || depth > 16)
      return out;
    switch (d->op)
    {
    case Opcode::Load:
      roots_of_pts(fn, d->args[0], out);
      break;
    case Opcode::FieldAddr:
    case Opcode::Index:
    case Opcode::PtrArith:
    case Opcode::Cast:
    {
      auto s = container_roots(fn, d->args[0], depth + 1);
      out.insert(s.begin(), s.end());
      break;
    }
    case Opcode::Arith:
    case Opcode::Compare:
      for (const auto& a : d->args)
      {
        auto s = container_roots(fn, a, depth + 1);
        out.insert(s.begin(), s.end());
      }
      break;
    default:
      break;
    }
    return out;
  }

  void
  loop_accesses(const IRFunction& fn, const pdg::Cfg& cfg, int header)
  {
    const pdg::Loop* loop = cfg.loop_with_header(header);
    const Instr& br = fn.terminator(header);
    if (!loop || br.args.empty())
      return;
    const Instr* cmp = def_of(fn, br.args[0]);
    if (!cmp || cmp->op != Opcode::Compare)
      return;
    std::set<std::string> cmp_vars;
    std::set<int> cmp_roots;
    for (const auto& a : cmp->args)
    {
      auto v = vars_of(fn, a);
      cmp_vars.insert(v.begin(), v.end());
      auto r = container_roots(fn, a);
      cmp_roots.insert(r.begin(), r.end());
    }
    int br_node = g_.pdg->instr_node(fn.name, br.id);
    for (int b : loop->body)
    {
      if (b == header || !cfg.reachable(b))
        continue;
      for (int id : fn.blocks[static_cast<std::size_t>(b)].instrs)
      {
        const Instr& a = fn.instrs[static_cast<std::size_t>(id)];
        if (a.op != Opcode::Index && a.op != Opcode::PtrArith)
          continue;
        if (!g_.pdg->has_edge(br_node, g_.pdg->instr_node(fn.name, id), EdgeKind::ControlDep))
          continue;
        auto idx_vars = vars_of(fn, a.args[1]);
        bool shares_var = std::any_of(idx_vars.begin(), idx_vars.end(), [&](const auto& v) { return cmp_vars.count(v); });
        auto base_roots = container_roots(fn, a.args[0]);
        bool shares_root =
          std::any_of(base_roots.begin(), base_roots.end(), [&](int r) { return cmp_roots.count(r) > 0; });
        if (shares_var && shares_root)
          add(CivClass::DM3, fn, a, "loop-condition", a.op == Opcode::Index ? "index" : "ptr-arith", {br_node}, true);
      }
    }
  }

  void
  function(const IRFunction& fn)
  {
    const pdg::Cfg& cfg = g_.cfg(fn.name);
    for (const auto& block : fn.blocks)
    {
      if (!cfg.reachable(block.id))
        continue;
      for (int id : block.instrs)
      {
        const Instr& ins = fn.instrs[static_cast<std::size_t>(id)];
        switch (ins.op)
        {
        case Opcode::Load:
        case Opcode::Store:
          if (taintable_address(fn, ins.args[0]))
            add(CivClass::MEM1, fn, ins, "address", ins.op == Opcode::Load ? "load" : "store",
                feeders(fn, ins, ins.args[0]));
          break;
        case Opcode::Index:
        case Opcode::PtrArith:
          if (!ins.args[1].is_const())
            add(CivClass::MEM2, fn, ins, ins.op == Opcode::Index ? "index" : "offset",
                ins.op == Opcode::Index ? "index" : "ptr-arith", feeders(fn, ins, ins.args[1]));
          break;
        case Opcode::FieldAddr:
          union_access(fn, ins, cfg);
          break;
        case Opcode::Arith:
          if (ins.arith == ArithOp::Div || ins.arith == ArithOp::Mod)
          {
            if (!ins.args[1].is_const())
              add(CivClass::AE1, fn, ins, "divisor", frontend::to_string(ins.arith), feeders(fn, ins, ins.args[1]));
          }
          else if (ins.arith == ArithOp::Add || ins.arith == ArithOp::Sub || ins.arith == ArithOp::Mul ||
                   ins.arith == ArithOp::Shl)
          {
            if (!ins.args[0].is_const() || !ins.args[1].is_const())
              add(CivClass::AE2, fn, ins, "operand", frontend::to_string(ins.arith),
                  merge(feeders(fn, ins, ins.args[0]), feeders(fn, ins, ins.args[1])));
          }
          break;
        case Opcode::Call:
        case Opcode::IndirectCall:
          call(fn, ins);
          break;
        case Opcode::Branch:
        case Opcode::Switch:
          if (ins.args.empty())
            break;
          if (cfg.is_loop_branch(block.id))
          {
            loop_accesses(fn, cfg, block.id);
            break;
          }
          add(CivClass::DM1, fn, ins, "condition", ins.op == Opcode::Branch ? "branch" : "switch",
              feeders(fn, ins, ins.args[0]));
          add(CivClass::DM2, fn, ins, "condition", ins.op == Opcode::Branch ? "branch" : "switch",
              feeders(fn, ins, ins.args[0]));
          break;
        default:
          break;
        }
      }
    }
  }

  const pdg::ProgramGraphs& g_;
  const boundary::BoundarySpec& spec_;
  std::vector<SinkDescriptor> out_;
};

} // namespace

std::vector<SinkDescriptor>
classify_sinks(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec)
{
  return SinkClassifier(graphs, spec).run();
}

} // namespace civ::taint
