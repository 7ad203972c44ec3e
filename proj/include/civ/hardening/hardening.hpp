#pragma once

#include "civ/boundary/surface.hpp"
#include "civ/taint/taint.hpp"
#include "civ/temporal/temporal.hpp"

#include <optional>
#include <string>
#include <vector>

namespace civ::hardening {

enum class ModeName
{
  Baseline,
  CfiP5,
  MemsafeP6,
};

struct Mode
{
  ModeName name = ModeName::Baseline;
  /// Subset of P1, P2, P3-partial, P4, P5, P6, in that order.
  std::vector<std::string> enforced_properties;
};

Mode make_mode(ModeName name);
/// "baseline", "cfi_p5", "memsafe_p6".
std::string to_string(ModeName name);
/// Accepts the CLI spellings (baseline, cfi, memsafe) and the full names.
std::optional<ModeName> mode_from_string(const std::string& s);

enum class Reason
{
  DirectDriverWrite,
  UnsafeIndexWrite,
  UnsafePointerArithWrite,
  CastAliasedWrite,
};

std::string to_string(Reason r);

struct ObjectSafety
{
  int location = -1;
  std::string label;
  bool safe = true;
  std::vector<Reason> reasons;

  bool has(Reason r) const;
};

/// Safety of every shared location against driver stores (points-to based).
std::vector<ObjectSafety> classify_safe_objects(const pdg::ProgramGraphs& graphs,
                                                const boundary::SharedFieldSet& shared);

struct Findings
{
  std::vector<taint::TaintTrace> traces;
  std::vector<temporal::TemporalFinding> temporal;
};

/// Filters baseline findings to those still reachable under `mode`.
/// `p5_temporal` holds the witness-backed temporal findings; required for
/// any mode enforcing P5 (ModeError otherwise).
Findings apply_mode(const Findings& findings, ModeName mode, const std::vector<ObjectSafety>& safety,
                    const std::vector<temporal::TemporalFinding>* p5_temporal);

/// Source value can still be corrupted with driver CFI (P5) or driver memory safety (P6) in place.
bool source_survives(const taint::TaintSource& source, ModeName mode, const std::vector<ObjectSafety>& safety);

} // namespace civ::hardening
