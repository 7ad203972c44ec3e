#include "civ/boundary/surface.hpp"

#include <algorithm>

namespace civ::boundary {

using frontend::Compartment;
using frontend::Opcode;
using frontend::Operand;

namespace {

bool
contains(const std::vector<std::string>& v, const std::string& s)
{
  return std::binary_search(v.begin(), v.end(), s);
}

} // namespace

bool
InterfaceSurface::has_import(const std::string& f) const
{
  return contains(imports, f);
}

bool
InterfaceSurface::has_export(const std::string& f) const
{
  return contains(exports, f);
}

bool
InterfaceSurface::has_global(const std::string& g) const
{
  return contains(globals, g);
}

InterfaceSurface
interface_surface(const pdg::ProgramGraphs& graphs, const BoundarySpec& spec)
{
  const auto& program = *graphs.program;
  std::set<std::string> imports;
  std::map<std::string, std::set<Compartment>> global_users;
  for (const auto* fn : program.functions())
  {
    for (const auto& ins : fn->instrs)
    {
      if (fn->compartment == Compartment::Driver && ins.is_call())
      {
        if (ins.op == Opcode::Call && spec.is_import(ins.callee))
          imports.insert(ins.callee);
        for (const auto& t : graphs.calls->targets(fn->name, ins.id))
          if (spec.is_import(t))
            imports.insert(t);
      }
      if (ins.op == Opcode::AddrOf && ins.args[0].kind == Operand::Kind::Global)
        global_users[ins.args[0].name].insert(fn->compartment);
    }
  }
  InterfaceSurface s;
  s.imports.assign(imports.begin(), imports.end());
  for (const auto& f : graphs.calls->address_taken())
  {
    const auto* fn = program.find_function(f);
    if (fn && fn->compartment == Compartment::Driver && spec.is_export(f))
      s.exports.push_back(f);
  }
  for (const auto& [g, users] : global_users)
    if (users.count(Compartment::Kernel) && users.count(Compartment::Driver))
      s.globals.push_back(g);
  std::sort(s.exports.begin(), s.exports.end());
  return s;
}

std::string
to_string(ItemKind kind)
{
  switch (kind)
  {
  case ItemKind::ImportParam:
    return "import_param";
  case ItemKind::ImportReturn:
    return "import_return";
  case ItemKind::ExportParam:
    return "export_param";
  case ItemKind::ExportReturn:
    return "export_return";
  case ItemKind::Global:
    return "global";
  }
  return "?";
}

bool
SharedFieldSet::is_accessed(std::size_t item, int node) const
{
  return items[item].driver_access[static_cast<std::size_t>(node)];
}

bool
SharedFieldSet::is_shared(std::size_t item, int node) const
{
  return items[item].driver_access[static_cast<std::size_t>(node)] &&
         items[item].kernel_access[static_cast<std::size_t>(node)];
}

std::set<int>
SharedFieldSet::shared_cells() const
{
  std::set<int> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t k = 0; k < items[i].tree.size(); ++k)
      if (is_shared(i, static_cast<int>(k)))
        out.insert(items[i].cells[k].begin(), items[i].cells[k].end());
  return out;
}

std::vector<FieldRecord>
SharedFieldSet::records() const
{
  std::vector<FieldRecord> out;
  for (std::size_t i = 0; i < items.size(); ++i)
  {
    const auto& it = items[i];
    std::string label = it.name;
    if (it.kind == ItemKind::ImportParam || it.kind == ItemKind::ExportParam)
      label += "#" + std::to_string(it.slot);
    else if (it.kind != ItemKind::Global)
      label += "#return";
    for (std::size_t k = 0; k < it.tree.size(); ++k)
      out.push_back(FieldRecord{label, it.tree.nodes[k].path, frontend::type_str(it.tree.nodes[k].type),
                                is_accessed(i, static_cast<int>(k)), is_shared(i, static_cast<int>(k))});
  }
  return out;
}

namespace {

class MetricsBuilder
{
public:
  MetricsBuilder(const pdg::ProgramGraphs& g) : g_(g), program_(*g.program), pt_(*g.pt) {}

  SharedFieldSet
  run(const InterfaceSurface& surface)
  {
    for (const auto& f : surface.imports)
      add_function(f, ItemKind::ImportParam, ItemKind::ImportReturn);
    for (const auto& f : surface.exports)
      add_function(f, ItemKind::ExportParam, ItemKind::ExportReturn);
    for (const auto& name : surface.globals)
    {
      const auto* glob = program_.find_global(name);
      int cell = pt_.global(name);
      if (!glob || cell < 0)
        continue;
      add_item(ItemKind::Global, name, -1, pdg::build_param_tree(name, glob->type, program_.types), {cell},
               pt_.pts(cell));
    }
    mark_accesses();
    for (std::size_t i = 0; i < out_.items.size(); ++i)
    {
      for (std::size_t k = 0; k < out_.items[i].tree.size(); ++k)
      {
        ++out_.deep;
        out_.accessed += out_.is_accessed(i, static_cast<int>(k)) ? 1 : 0;
        out_.shared += out_.is_shared(i, static_cast<int>(k)) ? 1 : 0;
      }
    }
    return std::move(out_);
  }

private:
  void
  add_item(ItemKind kind, const std::string& name, int slot, pdg::ParamTree tree, const std::set<int>& cells,
           const std::set<int>& targets)
  {
    SharedItem item;
    item.kind = kind;
    item.name = name;
    item.slot = slot;
    item.cells = pdg::tree_locations(tree, cells, targets, pt_).cells;
    item.tree = std::move(tree);
    item.driver_access.assign(item.tree.size(), false);
    item.kernel_access.assign(item.tree.size(), false);
    out_.items.push_back(std::move(item));
  }

  void
  add_function(const std::string& name, ItemKind param_kind, ItemKind return_kind)
  {
    if (const auto* fn = program_.find_function(name))
    {
      for (std::size_t i = 0; i < fn->params.size(); ++i)
      {
        const auto& p = fn->params[i];
        std::set<int> cells;
        std::set<int> targets;
        if (int v = pt_.var(name, p.name); v >= 0)
        {
          cells.insert(v);
          targets = pt_.pts(v);
        }
        add_item(param_kind, name, static_cast<int>(i), pdg::build_param_tree(p.name, p.type, program_.types), cells,
                 targets);
      }
      if (!frontend::is_void(fn->return_type))
      {
        std::set<int> cells;
        std::set<int> targets;
        if (int r = pt_.ret(name); r >= 0)
        {
          cells.insert(r);
          targets = pt_.pts(r);
        }
        add_item(return_kind, name, -1, pdg::build_param_tree("return", fn->return_type, program_.types), cells,
                 targets);
      }
      return;
    }
    const auto* proto = program_.find_prototype(name);
    if (!proto)
      return;
    const auto& sig = proto->type;
    for (std::size_t i = 0; i < sig->params.size(); ++i)
    {
      std::set<int> cells;
      std::set<int> targets;
      for_each_call(name, [&](const frontend::IRFunction& caller, const frontend::Instr& ins) {
        auto args = ins.call_args();
        if (i >= args.size())
          return;
        if (int v = pt_.value_loc(caller.name, args[i]); v >= 0)
          cells.insert(v);
        auto p = pt_.operand_pts(caller.name, args[i]);
        targets.insert(p.begin(), p.end());
      });
      add_item(param_kind, name, static_cast<int>(i),
               pdg::build_param_tree("arg" + std::to_string(i), sig->params[i], program_.types), cells, targets);
    }
    if (!frontend::is_void(sig->elem))
    {
      std::set<int> cells;
      std::set<int> targets;
      for_each_call(name, [&](const frontend::IRFunction& caller, const frontend::Instr& ins) {
        if (ins.dst < 0)
          return;
        if (int t = pt_.temp(caller.name, ins.dst); t >= 0)
        {
          cells.insert(t);
          targets.insert(pt_.pts(t).begin(), pt_.pts(t).end());
        }
      });
      add_item(return_kind, name, -1, pdg::build_param_tree("return", sig->elem, program_.types), cells, targets);
    }
  }

  template <typename F>
  void
  for_each_call(const std::string& callee, F&& f)
  {
    for (const auto* fn : program_.functions())
      for (const auto& ins : fn->instrs)
        if (ins.op == Opcode::Call && ins.callee == callee)
          f(*fn, ins);
  }

  void
  mark_accesses()
  {
    std::map<int, std::vector<std::pair<std::size_t, std::size_t>>> by_cell;
    for (std::size_t i = 0; i < out_.items.size(); ++i)
      for (std::size_t k = 0; k < out_.items[i].cells.size(); ++k)
        for (int c : out_.items[i].cells[k])
          by_cell[c].emplace_back(i, k);
    for (const auto* fn : program_.functions())
    {
      if (fn->compartment == Compartment::External)
        continue;
      const auto& cfg = g_.cfg(fn->name);
      for (const auto& ins : fn->instrs)
      {
        if ((ins.op != Opcode::Load && ins.op != Opcode::Store) || !cfg.reachable(ins.block))
          continue;
        for (int c : pt_.operand_pts(fn->name, ins.args[0]))
        {
          auto it = by_cell.find(c);
          if (it == by_cell.end())
            continue;
          for (const auto& [i, k] : it->second)
          {
            auto& item = out_.items[i];
            (fn->compartment == Compartment::Driver ? item.driver_access : item.kernel_access)[k] = true;
          }
        }
      }
    }
  }

  const pdg::ProgramGraphs& g_;
  const frontend::Program& program_;
  const pdg::PointsTo& pt_;
  SharedFieldSet out_;
};

} // namespace

SharedFieldSet
oversharing_metrics(const pdg::ProgramGraphs& graphs, const BoundarySpec&, const InterfaceSurface& surface)
{
  return MetricsBuilder(graphs).run(surface);
}

} // namespace civ::boundary
