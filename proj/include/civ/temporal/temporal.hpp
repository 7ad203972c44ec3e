#pragma once

#include "civ/boundary/surface.hpp"
#include "civ/pdg/graphs.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace civ::temporal {

enum class TemporalKind
{
  Sac,
  LockNeverUnlock,
  UnbalancedAlloc,
};

/// "SAC", "lock_never_unlock", "unbalanced_alloc".
std::string to_string(TemporalKind kind);
std::optional<TemporalKind> temporal_kind_from_string(const std::string& s);

struct LockInstance
{
  int location = -1;
  std::string label;
  bool shared = false;
  std::vector<pdg::CallSite> kernel_acquires;
  std::vector<pdg::CallSite> driver_acquires;
  std::vector<pdg::CallSite> kernel_releases;
  std::vector<pdg::CallSite> driver_releases;
};

struct PathStep
{
  std::string function;
  int block = -1;
};

/// Driver control-flow path from `start` to `end` (instruction ids in the
/// first and last step's functions). `end` is -1 when the path leaves
/// through a return of a driver export.
struct CfgWitness
{
  std::vector<PathStep> steps;
  pdg::CallSite start;
  pdg::CallSite end;
};

struct TemporalFinding
{
  TemporalKind kind = TemporalKind::Sac;
  /// SAC: {spinlock function, sleepable function}; lock: {acquire API, release API};
  /// alloc: {allocating function, freeing function}.
  std::vector<std::string> functions;
  /// Lock pairs: the acquire and release call sites.
  std::vector<pdg::CallSite> sites;
  /// Lock label or matched object type.
  std::string detail;
  std::optional<CfgWitness> witness;
};

std::vector<LockInstance> shared_locks(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                                       const boundary::InterfaceSurface& surface,
                                       const boundary::SharedFieldSet& shared);

std::size_t shared_lock_count(const std::vector<LockInstance>& locks);

/// Functions that may sleep: configured sleepable functions, callers of
/// allocations whose flags are not a constant atomic flag, and everything
/// that transitively calls one of those.
std::set<std::string> sleepable_closure(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec);

/// Baseline: every (spinlock import, sleepable import) name pair. With
/// `require_witness`, only pairs some driver path realises without releasing the lock in between.
std::vector<TemporalFinding> sac_pairs(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                                       const std::set<std::string>& sleepable, bool require_witness);

std::vector<TemporalFinding> lock_unlock_pairs(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                                               const std::vector<LockInstance>& locks, bool require_witness);

std::vector<TemporalFinding> alloc_dealloc_pairs(const pdg::ProgramGraphs& graphs,
                                                 const boundary::BoundarySpec& spec, bool require_witness);

/// Pointee types an allocation's result is used as, following casts,
/// assignments and returns; falls back to the `sizeof` operand.
std::set<std::string> allocated_types(const pdg::ProgramGraphs& graphs, const std::string& fn, int call_instr);
/// Pointee types a freed pointer argument had before any generic-pointer casts.
std::set<std::string> freed_types(const pdg::ProgramGraphs& graphs, const std::string& fn, int call_instr, int arg);

struct TemporalResults
{
  std::vector<LockInstance> locks;
  std::set<std::string> sleepable;
  std::vector<TemporalFinding> baseline;
  /// Witness-backed subset used once driver control flow is enforced.
  std::vector<TemporalFinding> cfi;
};

TemporalResults analyze_temporal(const pdg::ProgramGraphs& graphs, const boundary::BoundarySpec& spec,
                                 const boundary::InterfaceSurface& surface, const boundary::SharedFieldSet& shared);

} // namespace civ::temporal
