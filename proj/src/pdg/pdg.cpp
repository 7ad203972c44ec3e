#include "civ/pdg/pdg.hpp"

#include <algorithm>

namespace civ::pdg {

using namespace frontend;

std::string
to_string(NodeKind kind)
{
  switch (kind)
  {
  case NodeKind::Instr:
    return "instr";
  case NodeKind::FormalIn:
    return "formal_in";
  case NodeKind::FormalOut:
    return "formal_out";
  case NodeKind::ActualIn:
    return "actual_in";
  case NodeKind::ActualOut:
    return "actual_out";
  case NodeKind::ActualRet:
    return "actual_ret";
  case NodeKind::Global:
    return "global";
  }
  return "?";
}

std::string
to_string(EdgeKind kind)
{
  switch (kind)
  {
  case EdgeKind::DataDep:
    return "data_dep";
  case EdgeKind::ControlDep:
    return "control_dep";
  case EdgeKind::ParamIn:
    return "param_in";
  case EdgeKind::ParamOut:
    return "param_out";
  case EdgeKind::Call:
    return "call";
  case EdgeKind::Alias:
    return "alias";
  }
  return "?";
}

int
Pdg::add_node(PdgNode node)
{
  node.id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  out_.emplace_back();
  in_.emplace_back();
  return nodes_.back().id;
}

void
Pdg::add_edge(int src, int dst, EdgeKind kind)
{
  if (src < 0 || dst < 0 || src == dst)
    return;
  if (!edge_set_.emplace(src, dst, static_cast<int>(kind)).second)
    return;
  int id = static_cast<int>(edges_.size());
  edges_.push_back(PdgEdge{src, dst, kind});
  out_[static_cast<std::size_t>(src)].push_back(id);
  in_[static_cast<std::size_t>(dst)].push_back(id);
}

bool
Pdg::has_edge(int src, int dst, EdgeKind kind) const
{
  return edge_set_.count({src, dst, static_cast<int>(kind)}) > 0;
}

int
Pdg::instr_node(const std::string& fn, int instr) const
{
  auto it = instr_nodes_.find({fn, instr});
  return it == instr_nodes_.end() ? -1 : it->second;
}

const CallNodes*
Pdg::call_nodes(const std::string& fn, int instr) const
{
  auto it = calls_.find({fn, instr});
  return it == calls_.end() ? nullptr : &it->second;
}

int
Pdg::global_node(const std::string& name) const
{
  auto it = globals_.find(name);
  return it == globals_.end() ? -1 : it->second;
}

int
Pdg::temp_def_node(const std::string& fn, int t) const
{
  auto it = temp_defs_.find({fn, t});
  return it == temp_defs_.end() ? -1 : it->second;
}

Pdg
Pdg::from_graph(std::vector<PdgNode> nodes, const std::vector<PdgEdge>& edges)
{
  Pdg g;
  for (auto& n : nodes)
    g.add_node(std::move(n));
  for (const auto& e : edges)
    g.add_edge(e.src, e.dst, e.kind);
  return g;
}

nlohmann::json
Pdg::to_json() const
{
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : nodes_)
  {
    nodes.push_back({
      {"id", n.id},
      {"kind", to_string(n.kind)},
      {"function", n.function.empty() ? nlohmann::json(nullptr) : nlohmann::json(n.function)},
      {"range",
       {{"file", n.range.begin.file},
        {"line", n.range.begin.line},
        {"column", n.range.begin.column},
        {"end_line", n.range.end.line},
        {"end_column", n.range.end.column}}},
      {"field_path", n.field_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(n.field_path)},
    });
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : edges_)
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}});
  return {{"pdg_version", 1}, {"nodes", nodes}, {"edges", edges}};
}

class PdgBuilder
{
public:
  PdgBuilder(const Program& program, const CallGraph& calls, const PointsTo& pt, const std::map<std::string, Cfg>& cfgs)
    : program_(program), calls_(calls), pt_(pt), cfgs_(cfgs)
  {
  }

  Pdg
  run()
  {
    for (const Global* g : program_.globals())
      add_global(*g);
    for (const IRFunction* fn : program_.functions())
      add_function_nodes(*fn);
    for (const IRFunction* fn : program_.functions())
    {
      build_events(*fn);
      temp_edges(*fn);
      reaching_defs(*fn);
      control_edges(*fn);
    }
    interprocedural_edges();
    return std::move(pdg_);
  }

private:
  static std::set<int>
  merged(const TreeLocations& locs)
  {
    std::set<int> out;
    for (const auto& c : locs.cells)
      out.insert(c.begin(), c.end());
    return out;
  }

  void
  add_global(const Global& g)
  {
    int root = pt_.global(g.name);
    PdgNode n;
    n.kind = NodeKind::Global;
    n.global = g.name;
    n.field_path = g.name;
    n.range = SourceRange{g.pos, g.pos};
    n.type = g.type;
    if (root >= 0)
    {
      ParamTree tree = build_param_tree(g.name, g.type, program_.types);
      n.cells = merged(tree_locations(tree, {root}, pt_.pts(root), pt_));
      for (int l : pt_.rooted_at(root))
        n.cells.insert(l);
    }
    pdg_.globals_[g.name] = pdg_.add_node(std::move(n));
  }

  void
  add_tree_nodes(const ParamTree& tree, const TreeLocations& locs, PdgNode proto, std::vector<int>& out, bool skip_root)
  {
    out.assign(tree.size(), -1);
    for (std::size_t k = skip_root ? 1 : 0; k < tree.size(); ++k)
    {
      PdgNode n = proto;
      n.tree_node = static_cast<int>(k);
      n.field_path = tree.nodes[k].path;
      n.type = tree.nodes[k].type;
      n.cells = locs.cells[k];
      out[k] = pdg_.add_node(std::move(n));
    }
  }

  void
  add_function_nodes(const IRFunction& fn)
  {
    FunctionInfo& info = pdg_.functions_[fn.name];
    std::vector<TreeLocations> param_locs;
    for (std::size_t i = 0; i < fn.params.size(); ++i)
    {
      const Variable& p = fn.params[i];
      info.param_trees.push_back(build_param_tree(p.name, p.type, program_.types));
      int cell = pt_.var(fn.name, p.name);
      std::set<int> cells;
      std::set<int> targets;
      if (cell >= 0)
      {
        cells.insert(cell);
        targets = pt_.pts(cell);
      }
      param_locs.push_back(tree_locations(info.param_trees.back(), cells, targets, pt_));
    }
    for (std::size_t i = 0; i < fn.params.size(); ++i)
    {
      PdgNode proto;
      proto.kind = NodeKind::FormalIn;
      proto.function = fn.name;
      proto.slot = static_cast<int>(i);
      proto.range = SourceRange{fn.params[i].pos, fn.params[i].pos};
      info.formal_in.emplace_back();
      add_tree_nodes(info.param_trees[i], param_locs[i], proto, info.formal_in.back(), false);
    }
    for (std::size_t i = 0; i < fn.params.size(); ++i)
    {
      PdgNode proto;
      proto.kind = NodeKind::FormalOut;
      proto.function = fn.name;
      proto.slot = static_cast<int>(i);
      proto.range = SourceRange{fn.params[i].pos, fn.params[i].pos};
      info.formal_out.emplace_back();
      add_tree_nodes(info.param_trees[i], param_locs[i], proto, info.formal_out.back(), true);
    }
    info.return_tree = build_param_tree("return", fn.return_type, program_.types);
    {
      int ret = pt_.ret(fn.name);
      std::set<int> cells;
      std::set<int> targets;
      if (ret >= 0)
      {
        cells.insert(ret);
        targets = pt_.pts(ret);
      }
      PdgNode proto;
      proto.kind = NodeKind::FormalOut;
      proto.function = fn.name;
      proto.slot = kReturnSlot;
      proto.range = SourceRange{fn.range.begin, fn.range.begin};
      add_tree_nodes(info.return_tree, tree_locations(info.return_tree, cells, targets, pt_), proto, info.return_out,
                     true);
    }
    for (const auto& ins : fn.instrs)
    {
      PdgNode n;
      n.kind = NodeKind::Instr;
      n.function = fn.name;
      n.instr = ins.id;
      n.range = ins.range;
      n.type = ins.type;
      pdg_.instr_nodes_[{fn.name, ins.id}] = pdg_.add_node(std::move(n));
    }
    for (const auto& ins : fn.instrs)
      if (ins.is_call() && !calls_.targets(fn.name, ins.id).empty())
        add_call_nodes(fn, ins);
  }

  void
  add_call_nodes(const IRFunction& fn, const Instr& ins)
  {
    CallNodes& cn = pdg_.calls_[{fn.name, ins.id}];
    const auto& targets = calls_.targets(fn.name, ins.id);
    const IRFunction* first = program_.find_function(targets.front());
    TypeRef sig = ins.from_type;
    std::vector<Operand> args = ins.call_args();
    PdgNode proto;
    proto.function = fn.name;
    proto.instr = ins.id;
    proto.range = ins.range;
    std::vector<TreeLocations> locs;
    std::vector<ParamTree> trees;
    for (std::size_t i = 0; i < args.size(); ++i)
    {
      trees.push_back(build_param_tree(first->params[i].name, sig->params[i], program_.types));
      std::set<int> cells;
      int cell = pt_.value_loc(fn.name, args[i]);
      if (cell >= 0)
        cells.insert(cell);
      locs.push_back(tree_locations(trees.back(), cells, pt_.operand_pts(fn.name, args[i]), pt_));
    }
    for (std::size_t i = 0; i < args.size(); ++i)
    {
      proto.kind = NodeKind::ActualIn;
      proto.slot = static_cast<int>(i);
      cn.actual_in.emplace_back();
      add_tree_nodes(trees[i], locs[i], proto, cn.actual_in.back(), false);
    }
    for (std::size_t i = 0; i < args.size(); ++i)
    {
      proto.kind = NodeKind::ActualOut;
      proto.slot = static_cast<int>(i);
      cn.actual_out.emplace_back();
      add_tree_nodes(trees[i], locs[i], proto, cn.actual_out.back(), true);
    }
    if (!is_void(sig->elem))
    {
      ParamTree tree = build_param_tree("return", sig->elem, program_.types);
      std::set<int> cells;
      std::set<int> targets_pts;
      if (ins.dst >= 0)
      {
        int t = pt_.temp(fn.name, ins.dst);
        if (t >= 0)
        {
          cells.insert(t);
          targets_pts = pt_.pts(t);
        }
      }
      for (const auto& t : targets)
        if (int r = pt_.ret(t); r >= 0)
          targets_pts.insert(pt_.pts(r).begin(), pt_.pts(r).end());
      TreeLocations rl = tree_locations(tree, cells, targets_pts, pt_);
      proto.kind = NodeKind::ActualOut;
      proto.slot = kReturnSlot;
      add_tree_nodes(tree, rl, proto, cn.ret, true);
      PdgNode root = proto;
      root.kind = NodeKind::ActualRet;
      root.tree_node = 0;
      root.field_path = "return";
      root.type = sig->elem;
      root.cells = rl.cells[0];
      cn.ret[0] = pdg_.add_node(std::move(root));
    }
  }

  void
  build_events(const IRFunction& fn)
  {
    FunctionInfo& info = pdg_.functions_.at(fn.name);
    const Cfg& cfg = cfgs_.at(fn.name);
    info.events.assign(fn.blocks.size(), {});
    auto var_uses = [&](const Instr& ins) {
      std::vector<int> uses;
      for (const auto& op : ins.args)
        if (op.is_var())
          if (int l = pt_.var(fn.name, op.name); l >= 0)
            uses.push_back(l);
      return uses;
    };
    auto exit_events = [&](std::vector<Event>& out) {
      for (const auto& nodes : info.formal_out)
        for (int n : nodes)
          if (n >= 0)
            out.push_back(Event{n, set_vec(pdg_.node(n).cells), {}, false});
      for (int n : info.return_out)
        if (n >= 0)
          out.push_back(Event{n, set_vec(pdg_.node(n).cells), {}, false});
      for (const auto& [name, n] : pdg_.globals_)
        out.push_back(Event{n, set_vec(pdg_.node(n).cells), {}, false});
    };
    for (const auto& block : fn.blocks)
    {
      if (!cfg.reachable(block.id))
        continue;
      auto& events = info.events[static_cast<std::size_t>(block.id)];
      if (block.id == 0)
      {
        for (const auto& nodes : info.formal_in)
        {
          for (std::size_t k = 0; k < nodes.size(); ++k)
            events.push_back(Event{nodes[k], {}, set_vec(pdg_.node(nodes[k]).cells), k == 0});
        }
        for (const auto& [name, n] : pdg_.globals_)
          events.push_back(Event{n, {}, set_vec(pdg_.node(n).cells), false});
      }
      for (int id : block.instrs)
      {
        const Instr& ins = fn.instrs[static_cast<std::size_t>(id)];
        int node = pdg_.instr_node(fn.name, id);
        const CallNodes* cn = pdg_.call_nodes(fn.name, id);
        if (cn)
        {
          std::vector<Operand> args = ins.call_args();
          for (std::size_t i = 0; i < cn->actual_in.size(); ++i)
          {
            const auto& nodes = cn->actual_in[i];
            for (std::size_t k = 0; k < nodes.size(); ++k)
            {
              std::vector<int> uses;
              if (k == 0)
              {
                if (args[i].is_var())
                  if (int l = pt_.var(fn.name, args[i].name); l >= 0)
                    uses.push_back(l);
              }
              else
              {
                uses = set_vec(pdg_.node(nodes[k]).cells);
              }
              events.push_back(Event{nodes[k], uses, {}, false});
            }
          }
        }
        Event e{node, var_uses(ins), {}, false};
        if (ins.op == Opcode::Load)
        {
          auto p = pt_.operand_pts(fn.name, ins.args[0]);
          e.uses.insert(e.uses.end(), p.begin(), p.end());
        }
        else if (ins.op == Opcode::Store)
        {
          e.defs = set_vec(pt_.operand_pts(fn.name, ins.args[0]));
        }
        else if (ins.op == Opcode::Assign)
        {
          e.defs = {pt_.var(fn.name, ins.var)};
          e.strong = true;
        }
        events.push_back(std::move(e));
        if (cn)
        {
          for (const auto& nodes : cn->actual_out)
            for (int n : nodes)
              if (n >= 0)
                events.push_back(Event{n, {}, set_vec(pdg_.node(n).cells), false});
          for (std::size_t k = 1; k < cn->ret.size(); ++k)
            events.push_back(Event{cn->ret[k], {}, set_vec(pdg_.node(cn->ret[k]).cells), false});
        }
        if (ins.op == Opcode::Return)
          exit_events(events);
      }
    }
  }

  static std::vector<int>
  set_vec(const std::set<int>& s)
  {
    return {s.begin(), s.end()};
  }

  void
  reaching_defs(const IRFunction& fn)
  {
    const FunctionInfo& info = pdg_.functions_.at(fn.name);
    const Cfg& cfg = cfgs_.at(fn.name);
    using State = std::map<int, std::set<int>>;
    std::size_t n = fn.blocks.size();
    std::vector<State> out(n);
    auto transfer = [&](int b, State state, bool emit) {
      for (const auto& e : info.events[static_cast<std::size_t>(b)])
      {
        if (emit)
        {
          for (int loc : e.uses)
          {
            auto it = state.find(loc);
            if (it == state.end())
              continue;
            EdgeKind kind = pt_.loc(loc).kind == LocKind::Var ? EdgeKind::DataDep : EdgeKind::Alias;
            for (int def : it->second)
              pdg_.add_edge(def, e.node, kind);
          }
        }
        for (int loc : e.defs)
        {
          if (e.strong)
            state[loc] = {e.node};
          else
            state[loc].insert(e.node);
        }
      }
      return state;
    };
    auto in_state = [&](int b) {
      State in;
      for (int p : cfg.pred[static_cast<std::size_t>(b)])
      {
        if (!cfg.reachable(p))
          continue;
        for (const auto& [loc, defs] : out[static_cast<std::size_t>(p)])
          in[loc].insert(defs.begin(), defs.end());
      }
      return in;
    };
    bool changed = true;
    while (changed)
    {
      changed = false;
      for (int b = 0; b < static_cast<int>(n); ++b)
      {
        if (!cfg.reachable(b))
          continue;
        State next = transfer(b, in_state(b), false);
        if (next != out[static_cast<std::size_t>(b)])
        {
          out[static_cast<std::size_t>(b)] = std::move(next);
          changed = true;
        }
      }
    }
    for (int b = 0; b < static_cast<int>(n); ++b)
      if (cfg.reachable(b))
        transfer(b, in_state(b), true);
  }

  void
  temp_edges(const IRFunction& fn)
  {
    for (const auto& ins : fn.instrs)
    {
      if (ins.dst < 0)
        continue;
      int def = pdg_.instr_node(fn.name, ins.id);
      if (const CallNodes* cn = pdg_.call_nodes(fn.name, ins.id); cn && !cn->ret.empty())
        def = cn->ret[0];
      pdg_.temp_defs_[{fn.name, ins.dst}] = def;
    }
    for (const auto& ins : fn.instrs)
    {
      int node = pdg_.instr_node(fn.name, ins.id);
      for (const auto& op : ins.args)
        if (op.is_temp())
          pdg_.add_edge(pdg_.temp_def_node(fn.name, op.temp), node, EdgeKind::DataDep);
      if (const CallNodes* cn = pdg_.call_nodes(fn.name, ins.id))
      {
        std::vector<Operand> args = ins.call_args();
        for (std::size_t i = 0; i < cn->actual_in.size(); ++i)
          if (args[i].is_temp())
            pdg_.add_edge(pdg_.temp_def_node(fn.name, args[i].temp), cn->actual_in[i][0], EdgeKind::DataDep);
      }
    }
  }

  void
  control_edges(const IRFunction& fn)
  {
    const Cfg& cfg = cfgs_.at(fn.name);
    for (const auto& block : fn.blocks)
    {
      if (!cfg.reachable(block.id))
        continue;
      for (int c : cfg.controllers[static_cast<std::size_t>(block.id)])
      {
        int branch = pdg_.instr_node(fn.name, fn.blocks[static_cast<std::size_t>(c)].instrs.back());
        for (int id : block.instrs)
          pdg_.add_edge(branch, pdg_.instr_node(fn.name, id), EdgeKind::ControlDep);
      }
    }
  }

  void
  interprocedural_edges()
  {
    for (const IRFunction* fn : program_.functions())
    {
      for (const auto& ins : fn->instrs)
      {
        const CallNodes* cn = pdg_.call_nodes(fn->name, ins.id);
        if (!cn)
          continue;
        int call = pdg_.instr_node(fn->name, ins.id);
        for (const auto& t : calls_.targets(fn->name, ins.id))
        {
          const IRFunction* callee = program_.find_function(t);
          const FunctionInfo& info = pdg_.functions_.at(t);
          pdg_.add_edge(call, pdg_.instr_node(t, callee->blocks[0].instrs.front()), EdgeKind::Call);
          for (std::size_t i = 0; i < cn->actual_in.size(); ++i)
          {
            for (std::size_t k = 0; k < cn->actual_in[i].size(); ++k)
            {
              pdg_.add_edge(cn->actual_in[i][k], info.formal_in[i][k], EdgeKind::ParamIn);
              if (k > 0)
                pdg_.add_edge(info.formal_out[i][k], cn->actual_out[i][k], EdgeKind::ParamOut);
            }
          }
          if (!cn->ret.empty())
          {
            for (const auto& r : callee->instrs)
              if (r.op == Opcode::Return && !r.args.empty() && cfgs_.at(t).reachable(r.block))
                pdg_.add_edge(pdg_.instr_node(t, r.id), cn->ret[0], EdgeKind::DataDep);
            for (std::size_t k = 1; k < cn->ret.size() && k < info.return_out.size(); ++k)
              pdg_.add_edge(info.return_out[k], cn->ret[k], EdgeKind::ParamOut);
          }
        }
      }
    }
  }

  const Program& program_;
  const CallGraph& calls_;
  const PointsTo& pt_;
  const std::map<std::string, Cfg>& cfgs_;
  Pdg pdg_;
};

Pdg
build_pdg(const Program& program, const CallGraph& calls, const PointsTo& pt, const std::map<std::string, Cfg>& cfgs,
          const std::set<std::string>* declared_externals)
{
  if (declared_externals)
  {
    for (const IRFunction* fn : program.functions())
      for (const auto& ins : fn->instrs)
        if (ins.op == Opcode::Call && !program.find_function(ins.callee) && !declared_externals->count(ins.callee))
          throw UnknownCallee(ins.callee, ins.range.begin);
  }
  return PdgBuilder(program, calls, pt, cfgs).run();
}

} // namespace civ::pdg
