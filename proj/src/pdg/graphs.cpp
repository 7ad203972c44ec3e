#include "civ/pdg/graphs.hpp"

namespace civ::pdg {

ProgramGraphs
build_graphs(frontend::Program program, const std::set<std::string>* declared_externals)
{
  ProgramGraphs g;
  g.program = std::make_unique<frontend::Program>(std::move(program));
  g.program->reindex();
  for (const auto* fn : g.program->functions())
    g.cfgs.emplace(fn->name, build_cfg(*fn));
  g.calls = std::make_unique<CallGraph>(*g.program);
  g.pt = std::make_unique<PointsTo>(*g.program, *g.calls);
  g.pdg = std::make_unique<Pdg>(build_pdg(*g.program, *g.calls, *g.pt, g.cfgs, declared_externals));
  return g;
}

} // namespace civ::pdg
