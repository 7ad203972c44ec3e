#include "civ/cli/pipeline.hpp"

#include "civ/frontend/lower.hpp"
#include "civ/frontend/parser.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

namespace civ::cli {

namespace {

const SourcePos kCommandLine{"<command line>", 1, 1, 0};

template <typename F>
void
parallel_for(std::size_t n, int jobs, F&& body)
{
  std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1)
  {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
      {
        try
        {
          body(i);
        }
        catch (...)
        {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool)
    t.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

void
write_file(const std::string& path, const std::string& text)
{
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot open '" + path + "' for writing", kCommandLine);
  f << text;
  if (!f)
    throw IoError("write to '" + path + "' failed", kCommandLine);
}

std::string
read_file(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot read '" + path + "'", SourcePos{path, 0, 0, 0});
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::optional<temporal::TemporalKind>
kind_filter(const std::string& kind)
{
  if (kind.empty())
    return std::nullopt;
  if (kind == "sac")
    return temporal::TemporalKind::Sac;
  if (kind == "lock")
    return temporal::TemporalKind::LockNeverUnlock;
  if (kind == "alloc")
    return temporal::TemporalKind::UnbalancedAlloc;
  throw ConfigError("--kind must be one of sac, lock, alloc (got '" + kind + "')", kCommandLine);
}

/// Maps an exception to a diagnostic and exit status.
template <typename F>
int
guarded(std::ostream& err, F&& body)
{
  try
  {
    return body();
  }
  catch (const InternalError& e)
  {
    print_error(err, e);
    return 2;
  }
  catch (const MonotonicityViolation& e)
  {
    print_error(err, e);
    return 2;
  }
  catch (const Error& e)
  {
    print_error(err, e);
    return 1;
  }
  catch (const std::exception& e)
  {
    print_error(err, InternalError(e.what()));
    return 2;
  }
}

void
emit(const std::string& path, const std::string& text, std::ostream& out)
{
  if (path.empty() || path == "-")
    out << text;
  else
    write_file(path, text);
}

} // namespace

bool
color_enabled()
{
  const char* v = std::getenv("CIVSCAN_COLOR");
  return v && std::string(v) == "1";
}

void
print_error(std::ostream& err, const Error& e)
{
  if (color_enabled())
    err << "\033[1m" << format_pos(e.pos()) << ": \033[31m" << e.kind() << "\033[0m: " << e.message() << "\n";
  else
    err << e.diagnostic() << "\n";
}

void
print_warning(std::ostream& err, const Warning& w)
{
  if (color_enabled())
    err << "\033[1m" << format_pos(w.pos) << ": \033[33mwarning\033[0m: " << w.message << "\n";
  else
    err << format_pos(w.pos) << ": warning: " << w.message << "\n";
}

std::string
corpus_id(const std::vector<frontend::SourceFile>& files)
{
  std::vector<const frontend::SourceFile*> sorted;
  for (const auto& f : files)
    sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->path < b->path; });
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s)
    {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto* f : sorted)
  {
    mix(std::filesystem::path(f->path).filename().string());
    mix(f->text);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<frontend::SourceFile>
read_inputs(const std::vector<std::string>& paths, int jobs)
{
  std::vector<frontend::SourceFile> files(paths.size());
  parallel_for(paths.size(), jobs, [&](std::size_t i) { files[i] = frontend::read_source_file(paths[i]); });
  return files;
}

Analysis
analyze(const std::vector<frontend::SourceFile>& files, boundary::BoundarySpec spec, int jobs)
{
  Analysis a;
  a.corpus_id = corpus_id(files);
  std::set<std::string> paths;
  for (const auto& f : files)
    if (!paths.insert(f.path).second)
      throw IoError("file '" + f.path + "' given more than once", SourcePos{f.path, 0, 0, 0});

  std::vector<frontend::TranslationUnit> units(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) { units[i] = frontend::parse(files[i]); });
  frontend::Program program = frontend::lower(units);

  std::map<std::string, std::optional<frontend::Compartment>> hints;
  for (const auto& f : files)
    hints[f.path] = f.compartment_hint;
  boundary::apply_boundary(spec, program, hints);
  auto declared = spec.declared_functions();
  a.graphs = pdg::build_graphs(std::move(program), &declared);
  a.spec = std::move(spec);

  a.surface = boundary::interface_surface(a.graphs, a.spec);
  a.shared = boundary::oversharing_metrics(a.graphs, a.spec, a.surface);
  if (!(a.shared.shared <= a.shared.accessed && a.shared.accessed <= a.shared.deep))
    throw InternalError("oversharing chain violated");

  a.sources = taint::collect_sources(a.graphs, a.spec, a.surface, a.shared);
  a.sinks = taint::classify_sinks(a.graphs, a.spec);
  a.traces = taint::propagate(*a.graphs.pdg, a.sources, a.sinks, jobs);
  taint::guard_conditions(a.graphs, a.sources, a.traces);
  taint::prune(a.graphs, a.traces);

  a.temporal = temporal::analyze_temporal(a.graphs, a.spec, a.surface, a.shared);
  a.safety = hardening::classify_safe_objects(a.graphs, a.shared);
  return a;
}

report::CivReport
make_report(const Analysis& a, hardening::ModeName mode, std::optional<temporal::TemporalKind> kind)
{
  hardening::Findings base{a.traces, a.temporal.baseline};
  auto findings = hardening::apply_mode(base, mode, a.safety, &a.temporal.cfi);
  if (kind)
    std::erase_if(findings.temporal, [&](const auto& f) { return f.kind != *kind; });
  auto r = report::build_report(a.graphs, a.corpus_id, mode, a.shared, temporal::shared_lock_count(a.temporal.locks),
                                findings);
  if (kind)
    std::erase_if(r.temporal_counts, [&](const auto& kv) { return kv.first != temporal::to_string(*kind); });
  return r;
}

int
run(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    if (config.boundary_config.empty())
      throw ConfigError("missing boundary config: pass --config <file>", kCommandLine);
    if (config.inputs.empty())
      throw ConfigError("no input files given", kCommandLine);
    auto mode = hardening::mode_from_string(config.mode);
    if (!mode)
      throw ConfigError("--mode must be one of baseline, cfi, memsafe (got '" + config.mode + "')", kCommandLine);
    if (config.format != "json" && config.format != "table" && config.format != "csv")
      throw ConfigError("--format must be one of json, table, csv (got '" + config.format + "')", kCommandLine);
    if (config.jobs < 1)
      throw ConfigError("--jobs must be at least 1", kCommandLine);
    auto kind = kind_filter(config.kind);

    auto spec = boundary::load_boundary_config(config.boundary_config);
    auto files = read_inputs(config.inputs, config.jobs);
    auto a = analyze(files, std::move(spec), config.jobs);
    for (const auto& w : a.spec.warnings)
      print_warning(err, w);
    for (const auto& w : a.graphs.program->warnings)
      print_warning(err, w);

    if (!config.dump_ir.empty())
      write_file(config.dump_ir, frontend::dump_ir(*a.graphs.program));
    if (!config.dump_pdg.empty())
      write_file(config.dump_pdg, a.graphs.pdg->to_json().dump(2) + "\n");

    auto r = make_report(a, *mode, kind);
    if (!config.emit_traces.empty())
      write_file(config.emit_traces, report::emit_trace_lines(r));

    std::string text;
    if (config.format == "json")
      text = report::emit_json(r);
    else if (config.format == "table")
      text = report::emit_table(r);
    else
      text = report::emit_csv(r);
    emit(config.output, text, out);
    return 0;
  });
}

int
run_boundary_metrics(const std::vector<std::string>& inputs, const std::string& boundary_config, std::ostream& out,
                     std::ostream& err)
{
  return guarded(err, [&] {
    if (boundary_config.empty())
      throw ConfigError("missing boundary config: pass --config <file>", kCommandLine);
    if (inputs.empty())
      throw ConfigError("no input files given", kCommandLine);
    auto spec = boundary::load_boundary_config(boundary_config);
    auto files = read_inputs(inputs, 1);
    frontend::Program program = frontend::load_program(files);
    std::map<std::string, std::optional<frontend::Compartment>> hints;
    for (const auto& f : files)
      hints[f.path] = f.compartment_hint;
    boundary::apply_boundary(spec, program, hints);
    auto declared = spec.declared_functions();
    auto graphs = pdg::build_graphs(std::move(program), &declared);
    auto surface = boundary::interface_surface(graphs, spec);
    auto shared = boundary::oversharing_metrics(graphs, spec, surface);
    out << shared.deep << "," << shared.accessed << "," << shared.shared << "\n";
    return 0;
  });
}

int
run_diff(const std::string& base_path, const std::string& hardened_path, const std::string& format,
         std::ostream& out, std::ostream& err)
{
  return guarded(err, [&] {
    auto load = [](const std::string& path) {
      try
      {
        return report::report_from_json(nlohmann::json::parse(read_file(path)));
      }
      catch (const nlohmann::json::exception& e)
      {
        throw ConfigError(std::string("not a report: ") + e.what(), SourcePos{path, 1, 1, 0});
      }
    };
    auto base = load(base_path);
    auto hardened = load(hardened_path);
    auto rows = report::diff_modes(base, hardened);
    if (format == "csv")
    {
      out << "class,base,hardened,reduction,percent\n";
      for (const auto& r : rows)
        out << r.name << "," << r.base << "," << r.hardened << "," << r.reduction << "," << r.percent << "\n";
    }
    else if (format == "json")
    {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : rows)
        j.push_back({{"class", r.name},
                     {"base", r.base},
                     {"hardened", r.hardened},
                     {"reduction", r.reduction},
                     {"percent", r.percent}});
      out << nlohmann::json{{"base_mode", base.mode}, {"hardened_mode", hardened.mode}, {"rows", j}}.dump(2) << "\n";
    }
    else
      out << report::emit_diff(rows, base.mode, hardened.mode);
    return 0;
  });
}

} // namespace civ::cli
