#include "civ/pdg/paramtree.hpp"

#include <functional>

namespace civ::pdg {

using namespace frontend;

std::vector<int>
ParamTree::children(int node) const
{
  std::vector<int> out;
  for (const auto& n : nodes)
    if (n.parent == node)
      out.push_back(n.id);
  return out;
}

ParamTree
build_param_tree(const std::string& root_name, const TypeRef& type, const TypeTable& types)
{
  ParamTree tree;
  std::function<void(int, std::set<std::string>)> expand = [&](int index, std::set<std::string> seen) {
    TypeRef t = strip_arrays(tree.nodes[index].type);
    std::string base = tree.nodes[index].path + (is_array(tree.nodes[index].type) ? "[]" : "");
    auto add = [&](TreeStep step, const std::string& rec, const std::string& fld, TypeRef ft, std::string path) {
      TreeNode n;
      n.id = static_cast<int>(tree.nodes.size());
      n.parent = index;
      n.step = step;
      n.record = rec;
      n.field = fld;
      n.type = std::move(ft);
      n.path = std::move(path);
      tree.nodes.push_back(n);
      return n.id;
    };
    auto expand_record = [&](const std::string& rec, TreeStep step, const std::string& sep) {
      if (seen.count(rec))
      {
        tree.nodes[index].cut = true;
        return;
      }
      const TypeDecl* decl = types.record(rec);
      if (!decl)
        return;
      auto inner = seen;
      inner.insert(rec);
      for (const auto& f : decl->fields)
      {
        int child = add(step, rec, f.name, f.type, base + sep + f.name);
        expand(child, inner);
      }
    };
    if (is_record(t))
    {
      expand_record(t->record, TreeStep::FieldEmbedded, ".");
      return;
    }
    if (!is_pointer(t) || is_function_pointer(t) || is_void_pointer(t) || is_char_pointer(t))
      return;
    TypeRef pointee = strip_arrays(t->elem);
    if (is_record(pointee))
    {
      expand_record(pointee->record, TreeStep::FieldViaPtr, "->");
      return;
    }
    int child = add(TreeStep::Deref, "", "", t->elem, base + "->*");
    expand(child, seen);
  };
  TreeNode root;
  root.type = type;
  root.path = root_name;
  tree.nodes.push_back(root);
  expand(0, {});
  return tree;
}

TreeLocations
tree_locations(const ParamTree& tree, const std::set<int>& root_cells, const std::set<int>& root_targets,
               const PointsTo& pt)
{
  TreeLocations out;
  out.cells.resize(tree.size());
  out.targets.resize(tree.size());
  out.cells[0] = root_cells;
  out.targets[0] = root_targets;
  for (std::size_t i = 1; i < tree.size(); ++i)
  {
    const TreeNode& n = tree.nodes[i];
    const auto& parent_cells = out.cells[static_cast<std::size_t>(n.parent)];
    const auto& parent_targets = out.targets[static_cast<std::size_t>(n.parent)];
    auto& cells = out.cells[i];
    switch (n.step)
    {
    case TreeStep::FieldViaPtr:
      for (int o : parent_targets)
      {
        int f = pt.field(o, n.record, n.field);
        if (f >= 0)
          cells.insert(f);
      }
      break;
    case TreeStep::FieldEmbedded:
      for (int l : parent_cells)
      {
        int f = pt.field(l, n.record, n.field);
        if (f >= 0)
          cells.insert(f);
      }
      break;
    case TreeStep::Deref:
      cells = parent_targets;
      break;
    case TreeStep::Root:
      break;
    }
    for (int c : cells)
    {
      const auto& p = pt.pts(c);
      out.targets[i].insert(p.begin(), p.end());
    }
  }
  return out;
}

} // namespace civ::pdg
