#pragma once

#include "civ/frontend/types.hpp"
#include "civ/pdg/pointsto.hpp"

#include <set>
#include <string>
#include <vector>

namespace civ::pdg {

enum class TreeStep
{
  Root,
  FieldViaPtr,
  FieldEmbedded,
  Deref,
};

struct TreeNode
{
  int id = 0;
  int parent = -1;
  TreeStep step = TreeStep::Root;
  std::string record;
  std::string field;
  frontend::TypeRef type;
  /// Source-like path: `m`, `m->layers[].size`, `pos->*`.
  std::string path;
  /// Expansion stopped here because the record type repeats on the path.
  bool cut = false;
};

/// Field-by-field expansion of one parameter, return value or global.
/// Nodes are in preorder; node 0 is the root.
struct ParamTree
{
  std::vector<TreeNode> nodes;

  std::size_t size() const { return nodes.size(); }
  std::vector<int> children(int node) const;
};

ParamTree build_param_tree(const std::string& root_name, const frontend::TypeRef& type,
                           const frontend::TypeTable& types);

/// Abstract locations a tree node stands for, given the root's own cells and
/// the objects the root value points to.
struct TreeLocations
{
  std::vector<std::set<int>> cells;
  std::vector<std::set<int>> targets;
};

TreeLocations tree_locations(const ParamTree& tree, const std::set<int>& root_cells, const std::set<int>& root_targets,
                             const PointsTo& pt);

} // namespace civ::pdg
