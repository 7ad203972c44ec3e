#include "civ/taint/taint.hpp"

#include <algorithm>

namespace civ::taint {

using frontend::Compartment;
using frontend::TypeRef;

std::string
to_string(CivClass c)
{
  switch (c)
  {
  case CivClass::MEM1:
    return "MEM1";
  case CivClass::MEM2:
    return "MEM2";
  case CivClass::MEM3:
    return "MEM3";
  case CivClass::MEM4:
    return "MEM4";
  case CivClass::MEM5:
    return "MEM5";
  case CivClass::DM1:
    return "DM1";
  case CivClass::DM2:
    return "DM2";
  case CivClass::DM3:
    return "DM3";
  case CivClass::AE1:
    return "AE1";
  case CivClass::AE2:
    return "AE2";
  }
  return "?";
}

std::string
describe(CivClass c)
{
  switch (c)
  {
  case CivClass::MEM1:
    return "MEM1: Pointer value";
  case CivClass::MEM2:
    return "MEM2: Pointer offset/buffer index";
  case CivClass::MEM3:
    return "MEM3: Type selector";
  case CivClass::MEM4:
    return "MEM4: Sensitive kernel memory APIs";
  case CivClass::MEM5:
    return "MEM5: Corrupted string";
  case CivClass::DM1:
    return "DM1: Corrupted guard";
  case CivClass::DM2:
    return "DM2: Invalid/wrong error code";
  case CivClass::DM3:
    return "DM3: Corrupted loop condition";
  case CivClass::AE1:
    return "AE1: Divided by zero";
  case CivClass::AE2:
    return "AE2: Integer overflow/underflow";
  }
  return "?";
}

std::optional<CivClass>
civ_class_from_string(const std::string& s)
{
  for (CivClass c : kAllClasses)
    if (to_string(c) == s)
      return c;
  return std::nullopt;
}

std::string
to_string(Origin o)
{
  switch (o)
  {
  case Origin::InterfaceParam:
    return "interface-param";
  case Origin::InterfaceReturn:
    return "interface-return";
  case Origin::DriverCallbackReturn:
    return "driver-callback-return";
  case Origin::BoundaryGlobal:
    return "boundary-global";
  case Origin::SharedField:
    return "shared-field";
  }
  return "?";
}

std::string
to_string(ValueKind k)
{
  switch (k)
  {
  case ValueKind::Pointer:
    return "pointer";
  case ValueKind::Scalar:
    return "scalar";
  case ValueKind::TaggedUnionSelector:
    return "tagged-union-selector";
  case ValueKind::StringBuffer:
    return "string-buffer";
  case ValueKind::Any:
    return "any";
  }
  return "?";
}

bool
is_data_edge(pdg::EdgeKind kind)
{
  return kind == pdg::EdgeKind::DataDep || kind == pdg::EdgeKind::Alias || kind == pdg::EdgeKind::ParamIn ||
         kind == pdg::EdgeKind::ParamOut;
}

namespace {

bool
is_char(const TypeRef& t)
{
  return t && frontend::is_integer(t) && t->bits == 8;
}

bool
is_selector_field(const std::string& record, const std::string& field, const frontend::TypeTable& types)
{
  if (record.empty())
    return false;
  for (const auto* decl : types.all())
    if (decl->selector_field && decl->selector_owner == record && *decl->selector_field == field)
      return true;
  return false;
}

ValueKind
value_kind(const TypeRef& t, const pdg::TreeNode* node, const frontend::TypeTable& types)
{
  if (!t)
    return ValueKind::Any;
  if (frontend::is_pointer(t) || frontend::is_array(t))
  {
    TypeRef elem = frontend::strip_arrays(t->elem);
    if (is_char(elem))
      return ValueKind::StringBuffer;
    return frontend::is_pointer(t) ? ValueKind::Pointer : ValueKind::Any;
  }
  if (frontend::is_integer(t))
  {
    if (node && is_selector_field(node->record, node->field, types))
      return ValueKind::TaggedUnionSelector;
    return ValueKind::Scalar;
  }
  return ValueKind::Any;
}

class SourceCollector
{
public:
  SourceCollector(const pdg::ProgramGraphs& g, const boundary::BoundarySpec& spec) : g_(g), spec_(spec) {}

  std::vector<TaintSource>
  run(const boundary::SharedFieldSet& shared)
  {
    for (std::size_t i = 0; i < shared.items.size(); ++i)
    {
      const auto& item = shared.items[i];
      switch (item.kind)
      {
      case boundary::ItemKind::ImportParam:
        import_param(shared, i);
        break;
      case boundary::ItemKind::ExportParam:
      case boundary::ItemKind::ExportReturn:
        export_item(shared, i);
        break;
      case boundary::ItemKind::Global:
        if (int n = g_.pdg->global_node(item.name); n >= 0)
          add(n, Origin::BoundaryGlobal, item.name, item.tree.nodes[0]);
        break;
      case boundary::ItemKind::ImportReturn:
        break;
      }
    }
    for (std::size_t i = 0; i < out_.size(); ++i)
      out_[i].id = static_cast<int>(i);
    return std::move(out_);
  }

private:
  void
  add(int node, Origin origin, const std::string& owner, const pdg::TreeNode& tn)
  {
    if (node < 0 || !seen_.insert(node).second)
      return;
    const auto& n = g_.pdg->node(node);
    TaintSource s;
    s.node = node;
    s.origin = origin;
    s.function = owner;
    s.field_path = tn.path;
    s.type = tn.type;
    s.value_kind = value_kind(tn.type, &tn, g_.program->types);
    s.cells = n.cells;
    out_.push_back(std::move(s));
  }

  void
  import_param(const boundary::SharedFieldSet& shared, std::size_t i)
  {
    const auto& item = shared.items[i];
    const auto* fn = g_.program->find_function(item.name);
    if (!fn || fn->compartment != Compartment::Kernel)
      return;
    const auto& info = g_.pdg->function(item.name);
    const auto& nodes = info.formal_in[static_cast<std::size_t>(item.slot)];
    for (std::size_t k = 0; k < item.tree.size(); ++k)
    {
      const auto& tn = item.tree.nodes[k];
      if (k == 0)
      {
        bool scalar = frontend::is_integer(tn.type);
        bool pointer = frontend::is_pointer(tn.type);
        if (scalar || (pointer && spec_.taint_top_level_pointers))
          add(nodes[k], Origin::InterfaceParam, item.name, tn);
      }
      else if (shared.is_shared(i, static_cast<int>(k)))
      {
        add(nodes[k], Origin::SharedField, item.name, tn);
      }
    }
  }

  void
  export_item(const boundary::SharedFieldSet& shared, std::size_t i)
  {
    const auto& item = shared.items[i];
    for (const auto& site : g_.calls->callers(item.name))
    {
      const auto* caller = g_.program->find_function(site.caller);
      if (!caller || caller->compartment != Compartment::Kernel)
        continue;
      const auto* cn = g_.pdg->call_nodes(site.caller, site.instr);
      if (!cn)
        continue;
      const auto& ins = caller->instrs[static_cast<std::size_t>(site.instr)];
      if (item.kind == boundary::ItemKind::ExportReturn)
      {
        if (cn->ret.empty())
          continue;
        Origin root_origin =
          ins.op == frontend::Opcode::IndirectCall ? Origin::DriverCallbackReturn : Origin::InterfaceReturn;
        add(cn->ret[0], root_origin, item.name, item.tree.nodes[0]);
        for (std::size_t k = 1; k < item.tree.size() && k < cn->ret.size(); ++k)
          if (shared.is_shared(i, static_cast<int>(k)))
            add(cn->ret[k], Origin::SharedField, item.name, item.tree.nodes[k]);
        continue;
      }
      const auto slot = static_cast<std::size_t>(item.slot);
      if (slot >= cn->actual_out.size())
        continue;
      for (std::size_t k = 1; k < item.tree.size() && k < cn->actual_out[slot].size(); ++k)
        if (shared.is_shared(i, static_cast<int>(k)))
          add(cn->actual_out[slot][k], Origin::SharedField, item.name, item.tree.nodes[k]);
    }
  }

  const pdg::ProgramGraphs& g_;
  const boundary::BoundarySpec& spec_;
  std::vector<TaintSource> out_;
  std::set<int> seen_;
};

} // namespace

std::vector<TaintSource>
collect_sources(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                const boundary::InterfaceSurface&, const boundary::SharedFieldSet& shared)
{
  return SourceCollector(graphs, spec).run(shared);
}

bool
compatible(CivClass c, const TaintSource& source)
{
  switch (c)
  {
  case CivClass::MEM1:
    return source.type && frontend::is_pointer(source.type);
  case CivClass::MEM2:
  case CivClass::DM3:
  case CivClass::AE1:
  case CivClass::AE2:
    return source.type && frontend::is_integer(source.type);
  case CivClass::MEM3:
    return source.value_kind == ValueKind::TaggedUnionSelector;
  case CivClass::MEM5:
    return source.value_kind == ValueKind::StringBuffer;
  case CivClass::DM2:
    return source.origin == Origin::DriverCallbackReturn;
  case CivClass::MEM4:
  case CivClass::DM1:
    return true;
  }
  return false;
}

} // namespace civ::taint
