#pragma once

#include "civ/boundary/surface.hpp"
#include "civ/pdg/graphs.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace civ::taint {

enum class CivClass
{
  MEM1,
  MEM2,
  MEM3,
  MEM4,
  MEM5,
  DM1,
  DM2,
  DM3,
  AE1,
  AE2,
};

inline constexpr std::array<CivClass, 10> kAllClasses{CivClass::MEM1, CivClass::MEM2, CivClass::MEM3, CivClass::MEM4,
                                                      CivClass::MEM5, CivClass::DM1,  CivClass::DM2,  CivClass::DM3,
                                                      CivClass::AE1,  CivClass::AE2};

std::string to_string(CivClass c);
/// Table label, e.g. "MEM1: Pointer value".
std::string describe(CivClass c);
std::optional<CivClass> civ_class_from_string(const std::string& s);

enum class Origin
{
  InterfaceParam,
  InterfaceReturn,
  DriverCallbackReturn,
  BoundaryGlobal,
  SharedField,
};

enum class ValueKind
{
  Pointer,
  Scalar,
  TaggedUnionSelector,
  StringBuffer,
  Any,
};

std::string to_string(Origin o);
std::string to_string(ValueKind k);

struct TaintSource
{
  int id = 0;
  int node = -1;
  Origin origin = Origin::SharedField;
  ValueKind value_kind = ValueKind::Any;
  /// Interface function or global the value belongs to.
  std::string function;
  std::string field_path;
  frontend::TypeRef type;
  /// Abstract locations holding the value (empty for register values).
  std::set<int> cells;

  /// Key used to deduplicate counts: one entry per source field.
  std::string field_key() const { return function + ":" + field_path; }
};

struct SinkDescriptor
{
  int id = 0;
  CivClass civ_class = CivClass::MEM1;
  int node = -1;
  std::string function;
  /// "address", "index", "offset", "divisor", "operand", "condition", "arg<N>", "selector", "loop-condition".
  std::string operand_role;
  std::string kind;
  /// Nodes whose taint reaches the sink operand.
  std::vector<int> triggers;
  /// Trigger reaches the sink through one control-dependence hop (DM3, MEM3).
  bool control_hop = false;
};

struct TaintTrace
{
  int id = 0;
  TaintSource source;
  SinkDescriptor sink;
  std::vector<int> path;
  std::vector<int> checks;
  std::vector<int> post_sink_checks;
  bool controllable = true;
  std::vector<std::string> call_path;
};

/// Edges taint follows.
bool is_data_edge(pdg::EdgeKind kind);

std::vector<TaintSource> collect_sources(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                                         const boundary::InterfaceSurface& surface,
                                         const boundary::SharedFieldSet& shared);

std::vector<SinkDescriptor> classify_sinks(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec);

/// Source value kind and origin admitted by a sink class.
bool compatible(CivClass c, const TaintSource& source);

/// Forward closure per source; one shortest witness per (source, sink).
/// Sorted by source id, then sink id. `jobs` > 1 fans sources out over threads.
std::vector<TaintTrace> propagate(const pdg::Pdg& pdg, const std::vector<TaintSource>& sources,
                                  const std::vector<SinkDescriptor>& sinks, int jobs = 1);

/// Fills checks (dominating guards reachable from boundary data) and post_sink_checks.
void guard_conditions(const pdg::ProgramGraphs& graphs, const std::vector<TaintSource>& sources,
                      std::vector<TaintTrace>& traces);

/// Marks controllable per the two keep heuristics; returns the kept subset.
std::vector<TaintTrace> prune(const pdg::ProgramGraphs& graphs, std::vector<TaintTrace>& traces);

/// Controllable traces per class, one per (source field, sink node).
std::map<CivClass, int> quantify_shared_data(const std::vector<TaintTrace>& traces);

/// Controllable traces that survive deduplication, in trace order.
std::vector<const TaintTrace*> dedup_evidence(const std::vector<TaintTrace>& traces, CivClass c);

} // namespace civ::taint
