#pragma once

#include "civ/hardening/hardening.hpp"
#include "civ/taint/taint.hpp"
#include "civ/temporal/temporal.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace civ::report {

inline constexpr int kSchemaVersion = 1;

struct TraceRecord
{
  int id = 0;
  std::string civ_class;
  std::string source_function;
  std::string source_field_path;
  std::string source_origin;
  std::string source_value_kind;
  int source_node = -1;
  std::string sink_function;
  int sink_line = 0;
  int sink_column = 0;
  std::string sink_kind;
  std::string operand_role;
  int sink_node = -1;
  std::vector<std::string> call_path;
  std::vector<int> path;
  /// Source lines of the guarding branches.
  std::vector<int> checks;
  std::vector<int> post_sink_checks;
  bool controllable = true;

  bool operator==(const TraceRecord&) const = default;
};

struct TemporalRecord
{
  std::string kind;
  std::vector<std::string> functions;
  /// "function:line" of the call sites involved.
  std::vector<std::string> sites;
  std::string detail;
  /// "function:bbN" steps of the control-flow witness, empty in baseline mode.
  std::vector<std::string> witness;

  bool operator==(const TemporalRecord&) const = default;
};

struct Oversharing
{
  std::size_t deep = 0;
  std::size_t accessed = 0;
  std::size_t shared = 0;

  bool operator==(const Oversharing&) const = default;
};

struct CivReport
{
  std::string tool_version;
  std::string corpus_id;
  std::string mode;
  std::vector<std::string> enforced_properties;
  Oversharing oversharing;
  std::map<std::string, int> shared_data_counts;
  int concurrency_count = 0;
  std::map<std::string, int> temporal_counts;
  std::vector<TraceRecord> traces;
  std::vector<TraceRecord> pruned_traces;
  std::vector<TemporalRecord> temporal_findings;
  std::vector<std::string> metadata;

  bool operator==(const CivReport&) const = default;
};

/// Temporal kind labels in table order.
const std::vector<std::string>& temporal_kinds();

/// Builds the report for one analysed corpus under one mode.
CivReport build_report(const pdg::ProgramGraphs& graphs, const std::string& corpus_id, hardening::ModeName mode,
                       const boundary::SharedFieldSet& shared, std::size_t shared_locks,
                       const hardening::Findings& findings);

TraceRecord trace_record(const pdg::ProgramGraphs& graphs, const taint::TaintTrace& trace);

nlohmann::json to_json(const CivReport& r);
CivReport report_from_json(const nlohmann::json& j);

/// Sorted-key JSON document with a trailing newline.
std::string emit_json(const CivReport& r);
std::string emit_table(const CivReport& r);
/// Header `class,mode,count`, one row per CIV class, shared locks and temporal kind.
std::string emit_csv(const CivReport& r);
/// One JSON object per line per trace, kept and pruned.
std::string emit_trace_lines(const CivReport& r);

struct ReductionRow
{
  std::string name;
  int base = 0;
  int hardened = 0;
  int reduction = 0;
  /// One decimal place, e.g. "95.8".
  std::string percent;
};

/// Per-class absolute and percent reduction; CorpusMismatch when the reports
/// describe different inputs, MonotonicityViolation when any count grows.
std::vector<ReductionRow> diff_modes(const CivReport& base, const CivReport& hardened);
std::string emit_diff(const std::vector<ReductionRow>& rows, const std::string& base_mode,
                      const std::string& hardened_mode);

/// Percent reduction to one decimal; "0.0" when `base` is zero.
std::string percent_reduction(int base, int hardened);

} // namespace civ::report
