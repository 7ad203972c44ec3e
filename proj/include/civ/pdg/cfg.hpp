#pragma once

#include "civ/frontend/ir.hpp"

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace civ::pdg {

/// Plain directed graph used by the dominance algorithms.
struct Digraph
{
  int size = 0;
  std::vector<std::vector<int>> succ;
  int entry = 0;
  std::vector<int> exits;
};

/// Dominance facts over a Digraph extended with one virtual exit node
/// (index `size`) that every exit, and every block unable to reach an
/// exit, flows into.
struct Dominance
{
  int virtual_exit = 0;
  std::vector<bool> reachable;
  /// -1 for the entry and for unreachable nodes.
  std::vector<int> idom;
  /// Immediate postdominator; virtual_exit for nodes postdominated only by it.
  std::vector<int> ipdom;

  bool dominates(int a, int b) const;
  bool postdominates(int a, int b) const;
};

Dominance compute_dominance(const Digraph& g);

/// (controller, dependent) block pairs under the postdominance criterion.
std::vector<std::pair<int, int>> control_dependence(const Digraph& g, const Dominance& dom);

struct Loop
{
  int header = 0;
  std::set<int> body;
};

struct Cfg
{
  std::string function;
  Digraph graph;
  std::vector<std::vector<int>> pred;
  Dominance dom;
  /// controllers[b] = branch blocks that b is control dependent on.
  std::vector<std::vector<int>> controllers;
  std::vector<Loop> loops;

  int num_blocks() const { return graph.size; }
  bool reachable(int b) const { return dom.reachable[static_cast<std::size_t>(b)]; }
  /// True when `block` is a loop header whose conditional terminator leaves the loop.
  bool is_loop_branch(int block) const;
  const Loop* loop_with_header(int block) const;
};

Cfg build_cfg(const frontend::IRFunction& fn);

} // namespace civ::pdg
