#include "civ/pdg/callgraph.hpp"

namespace civ::pdg {

using namespace frontend;

CallGraph::CallGraph(const Program& program)
{
  for (const IRFunction* fn : program.functions())
    for (const auto& ins : fn->instrs)
      for (const auto& op : ins.args)
        if (op.kind == Operand::Kind::Func && program.find_function(op.name))
          address_taken_.insert(op.name);

  for (const IRFunction* fn : program.functions())
  {
    for (const auto& ins : fn->instrs)
    {
      std::vector<std::string> found;
      if (ins.op == Opcode::Call)
      {
        if (program.find_function(ins.callee))
          found.push_back(ins.callee);
      }
      else if (ins.op == Opcode::IndirectCall)
      {
        for (const auto& name : address_taken_)
        {
          const IRFunction* target = program.find_function(name);
          if (same_type(target->signature, ins.from_type))
            found.push_back(name);
        }
      }
      else
      {
        continue;
      }
      for (const auto& t : found)
      {
        callers_[t].push_back(CallSite{fn->name, ins.id});
        callees_[fn->name].insert(t);
      }
      targets_[{fn->name, ins.id}] = std::move(found);
    }
  }
}

const std::vector<std::string>&
CallGraph::targets(const std::string& caller, int instr) const
{
  static const std::vector<std::string> kNone;
  auto it = targets_.find({caller, instr});
  return it == targets_.end() ? kNone : it->second;
}

const std::vector<CallSite>&
CallGraph::callers(const std::string& callee) const
{
  static const std::vector<CallSite> kNone;
  auto it = callers_.find(callee);
  return it == callers_.end() ? kNone : it->second;
}

std::set<std::string>
CallGraph::reachable_from(const std::string& fn) const
{
  std::set<std::string> seen{fn};
  std::vector<std::string> work{fn};
  while (!work.empty())
  {
    std::string f = work.back();
    work.pop_back();
    auto it = callees_.find(f);
    if (it == callees_.end())
      continue;
    for (const auto& c : it->second)
      if (seen.insert(c).second)
        work.push_back(c);
  }
  return seen;
}

bool
CallGraph::reaches(const std::string& caller, const std::string& callee) const
{
  return reachable_from(caller).count(callee) > 0;
}

} // namespace civ::pdg
