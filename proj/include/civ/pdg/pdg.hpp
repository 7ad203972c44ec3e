#pragma once

#include "civ/frontend/lower.hpp"
#include "civ/pdg/callgraph.hpp"
#include "civ/pdg/cfg.hpp"
#include "civ/pdg/paramtree.hpp"
#include "civ/pdg/pointsto.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace civ::pdg {

enum class NodeKind
{
  Instr,
  FormalIn,
  FormalOut,
  ActualIn,
  ActualOut,
  ActualRet,
  Global,
};

enum class EdgeKind
{
  DataDep,
  ControlDep,
  ParamIn,
  ParamOut,
  Call,
  Alias,
};

std::string to_string(NodeKind kind);
std::string to_string(EdgeKind kind);

/// Parameter slot used for return-value trees.
inline constexpr int kReturnSlot = -1;

struct PdgNode
{
  int id = 0;
  NodeKind kind = NodeKind::Instr;
  std::string function;
  /// Instruction id; for actual nodes, the call instruction.
  int instr = -1;
  /// Parameter index or kReturnSlot for formal/actual nodes.
  int slot = -2;
  int tree_node = -1;
  std::string field_path;
  std::string global;
  SourceRange range;
  frontend::TypeRef type;
  /// Abstract locations the node reads or writes.
  std::set<int> cells;
};

struct PdgEdge
{
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::DataDep;
};

/// One program point of the def/use walk inside a block.
struct Event
{
  int node = -1;
  std::vector<int> uses;
  std::vector<int> defs;
  bool strong = false;
};

struct FunctionInfo
{
  std::vector<ParamTree> param_trees;
  ParamTree return_tree;
  /// formal_in[param][tree node] -> PDG node.
  std::vector<std::vector<int>> formal_in;
  /// formal_out[param][tree node] -> PDG node, -1 where absent (roots).
  std::vector<std::vector<int>> formal_out;
  std::vector<int> return_out;
  /// events[block] in program order; dead blocks stay empty.
  std::vector<std::vector<Event>> events;
};

struct CallNodes
{
  std::vector<std::vector<int>> actual_in;
  std::vector<std::vector<int>> actual_out;
  /// [0] is the ActualRet node, deeper entries are return-tree ActualOut nodes.
  std::vector<int> ret;
};

class Pdg
{
public:
  const std::vector<PdgNode>& nodes() const { return nodes_; }
  const PdgNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  const std::vector<PdgEdge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int node) const { return out_[static_cast<std::size_t>(node)]; }
  const std::vector<int>& in_edges(int node) const { return in_[static_cast<std::size_t>(node)]; }

  int instr_node(const std::string& fn, int instr) const;
  const CallNodes* call_nodes(const std::string& fn, int instr) const;
  const FunctionInfo& function(const std::string& fn) const { return functions_.at(fn); }
  int global_node(const std::string& name) const;
  /// Nodes defining temp `t` of `fn` (the instruction, or ActualRet for calls).
  int temp_def_node(const std::string& fn, int t) const;

  bool has_edge(int src, int dst, EdgeKind kind) const;

  nlohmann::json to_json() const;

  /// Graph with explicit nodes and edges and no program behind it.
  static Pdg from_graph(std::vector<PdgNode> nodes, const std::vector<PdgEdge>& edges);

private:
  friend class PdgBuilder;

  int add_node(PdgNode node);
  void add_edge(int src, int dst, EdgeKind kind);

  std::vector<PdgNode> nodes_;
  std::vector<PdgEdge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::set<std::tuple<int, int, int>> edge_set_;
  std::map<std::pair<std::string, int>, int> instr_nodes_;
  std::map<std::pair<std::string, int>, CallNodes> calls_;
  std::map<std::pair<std::string, int>, int> temp_defs_;
  std::map<std::string, FunctionInfo> functions_;
  std::map<std::string, int> globals_;
};

/// Builds the interprocedural PDG. When `declared_externals` is given, a
/// direct call to a function that is neither defined nor in the set raises
/// UnknownCallee.
Pdg build_pdg(const frontend::Program& program, const CallGraph& calls, const PointsTo& pt,
              const std::map<std::string, Cfg>& cfgs, const std::set<std::string>* declared_externals = nullptr);

} // namespace civ::pdg
