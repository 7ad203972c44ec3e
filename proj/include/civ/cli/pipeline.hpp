#pragma once

#include "civ/boundary/spec.hpp"
#include "civ/boundary/surface.hpp"
#include "civ/frontend/lexer.hpp"
#include "civ/hardening/hardening.hpp"
#include "civ/pdg/graphs.hpp"
#include "civ/report/report.hpp"
#include "civ/taint/taint.hpp"
#include "civ/temporal/temporal.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace civ::cli {

struct RunConfig
{
  std::vector<std::string> inputs;
  std::string boundary_config;
  std::string mode = "baseline";
  /// Empty means standard output.
  std::string output;
  std::string format = "json";
  std::string dump_ir;
  std::string dump_pdg;
  std::string emit_traces;
  int jobs = 1;
  /// "sac", "lock" or "alloc"; empty keeps every temporal kind.
  std::string kind;
};

/// Every mode-independent result for one corpus.
struct Analysis
{
  boundary::BoundarySpec spec;
  std::string corpus_id;
  pdg::ProgramGraphs graphs;
  boundary::InterfaceSurface surface;
  boundary::SharedFieldSet shared;
  std::vector<taint::TaintSource> sources;
  std::vector<taint::SinkDescriptor> sinks;
  std::vector<taint::TaintTrace> traces;
  temporal::TemporalResults temporal;
  std::vector<hardening::ObjectSafety> safety;
};

/// Stable identifier of an input set: FNV-1a over basenames and contents, in path order.
std::string corpus_id(const std::vector<frontend::SourceFile>& files);

/// Reads files with up to `jobs` workers; order follows `paths`.
std::vector<frontend::SourceFile> read_inputs(const std::vector<std::string>& paths, int jobs);

/// Front end, graphs and every analysis; parsing and taint fan out over `jobs` workers.
Analysis analyze(const std::vector<frontend::SourceFile>& files, boundary::BoundarySpec spec, int jobs);

/// Report of `a` under `mode`, optionally keeping only one temporal kind.
report::CivReport make_report(const Analysis& a, hardening::ModeName mode,
                              std::optional<temporal::TemporalKind> kind = std::nullopt);

/// Pipeline entry points; return the process exit status.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);
int run_boundary_metrics(const std::vector<std::string>& inputs, const std::string& boundary_config, std::ostream& out,
                         std::ostream& err);
int run_diff(const std::string& base_path, const std::string& hardened_path, const std::string& format,
             std::ostream& out, std::ostream& err);

/// Colored diagnostics when CIVSCAN_COLOR=1; plain otherwise.
bool color_enabled();
void print_error(std::ostream& err, const Error& e);
void print_warning(std::ostream& err, const Warning& w);

} // namespace civ::cli
