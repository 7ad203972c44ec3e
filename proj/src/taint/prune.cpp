#include "civ/taint/taint.hpp"

#include <algorithm>
#include <deque>

namespace civ::taint {

using frontend::Opcode;
using pdg::EdgeKind;
using pdg::NodeKind;

namespace {

/// Nodes reachable over data edges; `function` non-empty confines the walk to it.
std::set<int>
data_reach(const pdg::Pdg& pdg, const std::set<int>& from, const std::string& function = {})
{
  std::set<int> seen;
  std::deque<int> queue;
  for (int n : from)
    if ((function.empty() || pdg.node(n).function == function) && seen.insert(n).second)
      queue.push_back(n);
  while (!queue.empty())
  {
    int u = queue.front();
    queue.pop_front();
    for (int e : pdg.out_edges(u))
    {
      const auto& edge = pdg.edges()[static_cast<std::size_t>(e)];
      if (!is_data_edge(edge.kind))
        continue;
      if (!function.empty() && pdg.node(edge.dst).function != function)
        continue;
      if (seen.insert(edge.dst).second)
        queue.push_back(edge.dst);
    }
  }
  return seen;
}

bool
is_conditional(const frontend::Instr& ins)
{
  return (ins.op == Opcode::Branch || ins.op == Opcode::Switch) && !ins.args.empty();
}

class GuardFinder
{
public:
  GuardFinder(const pdg::ProgramGraphs& g, const std::vector<TaintSource>& sources) : g_(g)
  {
    std::set<int> from;
    for (const auto& s : sources)
      from.insert(s.node);
    boundary_reach_ = data_reach(*g_.pdg, from);
  }

  void
  fill(TaintTrace& tr) const
  {
    std::set<int> excluded(tr.sink.triggers.begin(), tr.sink.triggers.end());
    excluded.insert(tr.sink.node);
    std::set<int> checks;
    const auto& sink = g_.pdg->node(tr.sink.node);
    const auto* fn = g_.program->find_function(sink.function);
    if (!fn || sink.instr < 0)
      return;
    int block = fn->instrs[static_cast<std::size_t>(sink.instr)].block;
    dominating_guards(*fn, block, excluded, checks);
    for (std::size_t i = 0; i + 1 < tr.path.size(); ++i)
    {
      if (!g_.pdg->has_edge(tr.path[i], tr.path[i + 1], EdgeKind::ParamIn))
        continue;
      const auto& actual = g_.pdg->node(tr.path[i]);
      const auto* caller = g_.program->find_function(actual.function);
      if (actual.kind != NodeKind::ActualIn || !caller)
        continue;
      dominating_guards(*caller, caller->instrs[static_cast<std::size_t>(actual.instr)].block, excluded, checks);
    }
    tr.checks.assign(checks.begin(), checks.end());
    tr.post_sink_checks = post_checks(*fn, sink.instr, excluded, tr.sink);
  }

private:
  void
  dominating_guards(const frontend::IRFunction& fn, int block, const std::set<int>& excluded,
                    std::set<int>& checks) const
  {
    const pdg::Cfg& cfg = g_.cfg(fn.name);
    std::set<int> ancestors;
    std::vector<int> work{block};
    while (!work.empty())
    {
      int b = work.back();
      work.pop_back();
      for (int c : cfg.controllers[static_cast<std::size_t>(b)])
        if (ancestors.insert(c).second)
          work.push_back(c);
    }
    for (int c : ancestors)
    {
      if (!cfg.dom.dominates(c, block))
        continue;
      const auto& term = fn.terminator(c);
      if (!is_conditional(term))
        continue;
      int node = g_.pdg->instr_node(fn.name, term.id);
      if (!excluded.count(node) && boundary_reach_.count(node))
        checks.insert(node);
    }
  }

  std::vector<int>
  post_checks(const frontend::IRFunction& fn, int instr, const std::set<int>& excluded,
              const SinkDescriptor& sink) const
  {
    const pdg::Cfg& cfg = g_.cfg(fn.name);
    int start = fn.instrs[static_cast<std::size_t>(instr)].block;
    std::set<int> blocks;
    std::vector<int> work(cfg.graph.succ[static_cast<std::size_t>(start)]);
    while (!work.empty())
    {
      int b = work.back();
      work.pop_back();
      if (b >= cfg.num_blocks() || !blocks.insert(b).second)
        continue;
      for (int s : cfg.graph.succ[static_cast<std::size_t>(b)])
        work.push_back(s);
    }
    const auto& own = fn.terminator(start);
    if (own.id != instr)
      blocks.insert(start);
    std::set<int> from(sink.triggers.begin(), sink.triggers.end());
    from.insert(sink.node);
    auto reach = data_reach(*g_.pdg, from, fn.name);
    std::vector<int> out;
    for (int b : blocks)
    {
      const auto& term = fn.terminator(b);
      if (!is_conditional(term))
        continue;
      int node = g_.pdg->instr_node(fn.name, term.id);
      if (!excluded.count(node) && reach.count(node))
        out.push_back(node);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const pdg::ProgramGraphs& g_;
  std::set<int> boundary_reach_;
};

/// Loads in `fn` that may read a location one of `loads` reads.
std::set<int>
aliasing_loads(const pdg::ProgramGraphs& g, const frontend::IRFunction& fn, const std::set<int>& nodes)
{
  std::set<int> cells;
  for (int n : nodes)
  {
    const auto& node = g.pdg->node(n);
    if (node.kind != NodeKind::Instr)
      continue;
    const auto& ins = fn.instrs[static_cast<std::size_t>(node.instr)];
    if (ins.op == Opcode::Load)
    {
      auto p = g.pt->operand_pts(fn.name, ins.args[0]);
      cells.insert(p.begin(), p.end());
    }
  }
  std::set<int> out;
  if (cells.empty())
    return out;
  for (const auto& ins : fn.instrs)
  {
    if (ins.op != Opcode::Load)
      continue;
    auto p = g.pt->operand_pts(fn.name, ins.args[0]);
    if (std::any_of(p.begin(), p.end(), [&](int l) { return cells.count(l) > 0; }))
      if (int n = g.pdg->instr_node(fn.name, ins.id); n >= 0)
        out.insert(n);
  }
  return out;
}

bool
checks_sink_data(const pdg::ProgramGraphs& g, const TaintTrace& tr, int check)
{
  const std::string& function = g.pdg->node(check).function;
  const auto* fn = g.program->find_function(function);
  if (!fn)
    return false;
  std::set<int> values;
  for (int n : tr.path)
    if (n != tr.sink.node && g.pdg->node(n).function == function)
      values.insert(n);
  auto alias = aliasing_loads(g, *fn, values);
  values.insert(alias.begin(), alias.end());
  return data_reach(*g.pdg, values, function).count(check) > 0;
}

} // namespace

void
guard_conditions(const pdg::ProgramGraphs& graphs, const std::vector<TaintSource>& sources,
                 std::vector<TaintTrace>& traces)
{
  GuardFinder finder(graphs, sources);
  for (auto& tr : traces)
    finder.fill(tr);
}

std::vector<TaintTrace>
prune(const pdg::ProgramGraphs& graphs, std::vector<TaintTrace>& traces)
{
  std::vector<TaintTrace> kept;
  for (auto& tr : traces)
  {
    tr.controllable = std::none_of(tr.checks.begin(), tr.checks.end(),
                                   [&](int c) { return checks_sink_data(graphs, tr, c); });
    if (tr.controllable)
      kept.push_back(tr);
  }
  return kept;
}

std::vector<const TaintTrace*>
dedup_evidence(const std::vector<TaintTrace>& traces, CivClass c)
{
  std::vector<const TaintTrace*> out;
  std::set<std::pair<std::string, int>> seen;
  for (const auto& tr : traces)
    if (tr.controllable && tr.sink.civ_class == c && seen.insert({tr.source.field_key(), tr.sink.node}).second)
      out.push_back(&tr);
  return out;
}

std::map<CivClass, int>
quantify_shared_data(const std::vector<TaintTrace>& traces)
{
  std::map<CivClass, int> out;
  for (CivClass c : kAllClasses)
    out[c] = static_cast<int>(dedup_evidence(traces, c).size());
  return out;
}

} // namespace civ::taint
