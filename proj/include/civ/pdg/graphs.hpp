#pragma once

#include "civ/pdg/cfg.hpp"
#include "civ/pdg/pdg.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>

namespace civ::pdg {

/// A lowered program with every derived graph built over it.
struct ProgramGraphs
{
  std::unique_ptr<frontend::Program> program;
  std::unique_ptr<CallGraph> calls;
  std::unique_ptr<PointsTo> pt;
  std::map<std::string, Cfg> cfgs;
  std::unique_ptr<Pdg> pdg;

  const Cfg& cfg(const std::string& fn) const { return cfgs.at(fn); }
};

ProgramGraphs build_graphs(frontend::Program program, const std::set<std::string>* declared_externals = nullptr);

} // namespace civ::pdg
