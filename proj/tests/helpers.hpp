#pragma once

#include "civ/boundary/spec.hpp"
#include "civ/cli/pipeline.hpp"
#include "civ/boundary/surface.hpp"
#include "civ/frontend/lower.hpp"
#include "civ/pdg/graphs.hpp"
#include "civ/taint/taint.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace civtest {

/// Kernel file, driver file and boundary config analysed together.
struct Scenario
{
  civ::boundary::BoundarySpec spec;
  civ::pdg::ProgramGraphs graphs;
  civ::boundary::InterfaceSurface surface;
  civ::boundary::SharedFieldSet shared;
};

inline Scenario
scenario(const std::string& kernel, const std::string& driver, const std::string& config)
{
  using namespace civ;
  Scenario s;
  s.spec = boundary::parse_boundary_config(config, "b.toml");
  std::vector<frontend::SourceFile> files{{"kernel.mker", kernel, frontend::Compartment::Kernel},
                                          {"driver.mker", driver, frontend::Compartment::Driver}};
  frontend::Program program = frontend::load_program(files);
  std::map<std::string, std::optional<frontend::Compartment>> hints;
  for (const auto& f : files)
    hints[f.path] = f.compartment_hint;
  boundary::apply_boundary(s.spec, program, hints);
  auto declared = s.spec.declared_functions();
  s.graphs = pdg::build_graphs(std::move(program), &declared);
  s.surface = boundary::interface_surface(s.graphs, s.spec);
  s.shared = boundary::oversharing_metrics(s.graphs, s.spec, s.surface);
  return s;
}

/// Taint stages over one scenario.
struct TaintRun
{
  std::vector<civ::taint::TaintSource> sources;
  std::vector<civ::taint::SinkDescriptor> sinks;
  std::vector<civ::taint::TaintTrace> traces;
  std::vector<civ::taint::TaintTrace> kept;
};

inline TaintRun
run_taint(const Scenario& s, int jobs = 1)
{
  using namespace civ;
  TaintRun r;
  r.sources = taint::collect_sources(s.graphs, s.spec, s.surface, s.shared);
  r.sinks = taint::classify_sinks(s.graphs, s.spec);
  r.traces = taint::propagate(*s.graphs.pdg, r.sources, r.sinks, jobs);
  taint::guard_conditions(s.graphs, r.sources, r.traces);
  r.kept = taint::prune(s.graphs, r.traces);
  return r;
}

/// Case directories under corpus/, sorted.
inline std::vector<std::string>
corpus_cases()
{
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(CIV_CORPUS_DIR))
    if (e.is_directory())
      out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string
case_dir(const std::string& name)
{
  return std::string(CIV_CORPUS_DIR) + "/" + name;
}

inline std::vector<std::string>
case_inputs(const std::string& name)
{
  return {case_dir(name) + "/kernel.mker", case_dir(name) + "/driver.mker"};
}

inline civ::cli::Analysis
analyze_case(const std::string& name, int jobs = 1)
{
  auto spec = civ::boundary::load_boundary_config(case_dir(name) + "/boundary.toml");
  return civ::cli::analyze(civ::cli::read_inputs(case_inputs(name), jobs), std::move(spec), jobs);
}

} // namespace civtest
