#include "civ/pdg/cfg.hpp"

#include <algorithm>

namespace civ::pdg {

namespace {

using Sets = std::vector<std::vector<char>>;

/// Iterative set-based dominators over `preds`, rooted at `root`.
Sets
dominator_sets(int n, const std::vector<std::vector<int>>& preds, int root, const std::vector<bool>& live)
{
  Sets dom(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 1));
  dom[root].assign(static_cast<std::size_t>(n), 0);
  dom[root][root] = 1;
  bool changed = true;
  while (changed)
  {
    changed = false;
    for (int v = 0; v < n; ++v)
    {
      if (v == root || !live[v])
        continue;
      std::vector<char> next(static_cast<std::size_t>(n), 1);
      bool any = false;
      for (int p : preds[v])
      {
        if (!live[p])
          continue;
        any = true;
        for (int i = 0; i < n; ++i)
          next[i] = next[i] && dom[p][i];
      }
      if (!any)
        next.assign(static_cast<std::size_t>(n), 0);
      next[v] = 1;
      if (next != dom[v])
      {
        dom[v] = std::move(next);
        changed = true;
      }
    }
  }
  return dom;
}

std::vector<int>
immediate(const Sets& dom, int root, const std::vector<bool>& live)
{
  int n = static_cast<int>(dom.size());
  std::vector<int> size(static_cast<std::size_t>(n), 0);
  for (int v = 0; v < n; ++v)
    size[v] = static_cast<int>(std::count(dom[v].begin(), dom[v].end(), 1));
  std::vector<int> idom(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v)
  {
    if (v == root || !live[v])
      continue;
    // The strict dominator with the largest dominator set is the closest.
    int best = -1;
    for (int d = 0; d < n; ++d)
      if (d != v && dom[v][d] && (best < 0 || size[d] > size[best]))
        best = d;
    idom[v] = best;
  }
  return idom;
}

} // namespace

bool
Dominance::dominates(int a, int b) const
{
  for (int v = b; v >= 0; v = idom[v])
    if (v == a)
      return true;
  return false;
}

bool
Dominance::postdominates(int a, int b) const
{
  for (int v = b; v >= 0; v = v == virtual_exit ? -1 : ipdom[v])
    if (v == a)
      return true;
  return false;
}

Dominance
compute_dominance(const Digraph& g)
{
  int n = g.size;
  Dominance d;
  d.virtual_exit = n;
  d.reachable.assign(static_cast<std::size_t>(n), false);
  std::vector<int> stack{g.entry};
  if (n > 0)
    d.reachable[g.entry] = true;
  while (!stack.empty())
  {
    int v = stack.back();
    stack.pop_back();
    for (int s : g.succ[v])
      if (!d.reachable[s])
      {
        d.reachable[s] = true;
        stack.push_back(s);
      }
  }

  std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v)
    for (int s : g.succ[v])
      preds[s].push_back(v);
  Sets dom = dominator_sets(n, preds, g.entry, d.reachable);
  d.idom = immediate(dom, g.entry, d.reachable);

  // Reverse graph with the virtual exit as its root.
  std::vector<std::vector<int>> rsucc(static_cast<std::size_t>(n + 1));
  std::vector<bool> to_exit(static_cast<std::size_t>(n + 1), false);
  to_exit[n] = true;
  for (int e : g.exits)
    rsucc[n].push_back(e);
  for (int v = 0; v < n; ++v)
    for (int s : g.succ[v])
      rsucc[s].push_back(v);
  stack.assign(1, n);
  while (!stack.empty())
  {
    int v = stack.back();
    stack.pop_back();
    for (int p : rsucc[v])
      if (!to_exit[p])
      {
        to_exit[p] = true;
        stack.push_back(p);
      }
  }
  for (int v = 0; v < n; ++v)
  {
    if (d.reachable[v] && !to_exit[v])
      rsucc[n].push_back(v);
  }
  // Predecessors in the reverse graph are successors in the forward one.
  std::vector<std::vector<int>> rpreds(static_cast<std::size_t>(n + 1));
  for (int v = 0; v <= n; ++v)
    for (int s : rsucc[v])
      rpreds[s].push_back(v);
  std::vector<bool> live(d.reachable);
  live.push_back(true);
  Sets pdom = dominator_sets(n + 1, rpreds, n, live);
  d.ipdom = immediate(pdom, n, live);
  d.ipdom.resize(static_cast<std::size_t>(n));
  return d;
}

std::vector<std::pair<int, int>>
control_dependence(const Digraph& g, const Dominance& dom)
{
  std::set<std::pair<int, int>> out;
  for (int a = 0; a < g.size; ++a)
  {
    if (!dom.reachable[a])
      continue;
    for (int s : g.succ[a])
    {
      if (s != a && dom.postdominates(s, a))
        continue;
      for (int runner = s; runner != dom.ipdom[a] && runner != dom.virtual_exit; runner = dom.ipdom[runner])
        out.emplace(a, runner);
    }
  }
  return {out.begin(), out.end()};
}

bool
Cfg::is_loop_branch(int block) const
{
  const Loop* loop = loop_with_header(block);
  if (!loop)
    return false;
  const auto& succ = graph.succ[block];
  if (succ.size() < 2)
    return false;
  return std::any_of(succ.begin(), succ.end(), [&](int s) { return !loop->body.count(s); });
}

const Loop*
Cfg::loop_with_header(int block) const
{
  for (const auto& l : loops)
    if (l.header == block)
      return &l;
  return nullptr;
}

Cfg
build_cfg(const frontend::IRFunction& fn)
{
  Cfg cfg;
  cfg.function = fn.name;
  int n = static_cast<int>(fn.blocks.size());
  cfg.graph.size = n;
  cfg.graph.succ.resize(static_cast<std::size_t>(n));
  cfg.pred.resize(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b)
  {
    std::vector<int> succ = fn.successors(b);
    std::sort(succ.begin(), succ.end());
    succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    cfg.graph.succ[b] = succ;
    for (int s : succ)
      cfg.pred[s].push_back(b);
    if (fn.terminator(b).op == frontend::Opcode::Return)
      cfg.graph.exits.push_back(b);
  }
  cfg.dom = compute_dominance(cfg.graph);
  cfg.controllers.resize(static_cast<std::size_t>(n));
  for (auto [c, b] : control_dependence(cfg.graph, cfg.dom))
    cfg.controllers[b].push_back(c);

  for (int t = 0; t < n; ++t)
  {
    if (!cfg.reachable(t))
      continue;
    for (int h : cfg.graph.succ[t])
    {
      if (!cfg.dom.dominates(h, t))
        continue;
      Loop* loop = nullptr;
      for (auto& l : cfg.loops)
        if (l.header == h)
          loop = &l;
      if (!loop)
      {
        cfg.loops.push_back(Loop{h, {h}});
        loop = &cfg.loops.back();
      }
      std::vector<int> work{t};
      while (!work.empty())
      {
        int v = work.back();
        work.pop_back();
        if (!loop->body.insert(v).second)
          continue;
        for (int p : cfg.pred[v])
          if (cfg.reachable(p))
            work.push_back(p);
      }
    }
  }
  std::sort(cfg.loops.begin(), cfg.loops.end(), [](const Loop& a, const Loop& b) { return a.header < b.header; });
  return cfg;
}

} // namespace civ::pdg
