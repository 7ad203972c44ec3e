#include "civ/taint/taint.hpp"

#include <algorithm>
#include <atomic>
#include <deque>
#include <thread>

namespace civ::taint {

namespace {

std::vector<TaintTrace>
from_source(const pdg::Pdg& pdg, const TaintSource& source, const std::vector<SinkDescriptor>& sinks)
{
  std::vector<TaintTrace> out;
  const std::size_t n = pdg.nodes().size();
  std::vector<int> dist(n, -1);
  std::vector<int> parent(n, -1);
  std::deque<int> queue{source.node};
  dist[static_cast<std::size_t>(source.node)] = 0;
  while (!queue.empty())
  {
    int u = queue.front();
    queue.pop_front();
    std::vector<int> next;
    for (int e : pdg.out_edges(u))
    {
      const auto& edge = pdg.edges()[static_cast<std::size_t>(e)];
      if (is_data_edge(edge.kind))
        next.push_back(edge.dst);
    }
    std::sort(next.begin(), next.end());
    for (int v : next)
    {
      if (dist[static_cast<std::size_t>(v)] >= 0)
        continue;
      dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
      parent[static_cast<std::size_t>(v)] = u;
      queue.push_back(v);
    }
  }

  for (const auto& sink : sinks)
  {
    if (!compatible(sink.civ_class, source))
      continue;
    int best = -1;
    for (int t : sink.triggers)
    {
      int d = dist[static_cast<std::size_t>(t)];
      if (d < 0)
        continue;
      if (best < 0 || d < dist[static_cast<std::size_t>(best)] ||
          (d == dist[static_cast<std::size_t>(best)] && t < best))
        best = t;
    }
    if (best < 0)
      continue;
    TaintTrace tr;
    tr.source = source;
    tr.sink = sink;
    for (int v = best; v >= 0; v = parent[static_cast<std::size_t>(v)])
      tr.path.push_back(v);
    std::reverse(tr.path.begin(), tr.path.end());
    if (tr.path.back() != sink.node)
      tr.path.push_back(sink.node);
    for (int v : tr.path)
    {
      const auto& fn = pdg.node(v).function;
      if (!fn.empty() && (tr.call_path.empty() || tr.call_path.back() != fn))
        tr.call_path.push_back(fn);
    }
    out.push_back(std::move(tr));
  }
  return out;
}

} // namespace

std::vector<TaintTrace>
propagate(const pdg::Pdg& pdg, const std::vector<TaintSource>& sources, const std::vector<SinkDescriptor>& sinks,
          int jobs)
{
  std::vector<std::vector<TaintTrace>> per_source(sources.size());
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), sources.size());
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < sources.size(); ++i)
      per_source[i] = from_source(pdg, sources[i], sinks);
  }
  else
  {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < sources.size(); i = next++)
          per_source[i] = from_source(pdg, sources[i], sinks);
      });
    for (auto& t : pool)
      t.join();
  }

  std::vector<TaintTrace> out;
  for (auto& v : per_source)
    for (auto& t : v)
      out.push_back(std::move(t));
  std::stable_sort(out.begin(), out.end(), [](const TaintTrace& a, const TaintTrace& b) {
    return std::pair(a.source.id, a.sink.id) < std::pair(b.source.id, b.sink.id);
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].id = static_cast<int>(i);
  return out;
}

} // namespace civ::taint
