#include "civ/report/report.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace civ::report {

using nlohmann::json;

const std::vector<std::string>&
temporal_kinds()
{
  static const std::vector<std::string> kinds{"SAC", "lock_never_unlock", "unbalanced_alloc"};
  return kinds;
}

namespace {

std::string
temporal_label(const std::string& kind)
{
  if (kind == "SAC")
    return "SAC: Sleep in atomic context";
  if (kind == "lock_never_unlock")
    return "Lock and never unlock";
  return "Unbalanced allocation/deallocation";
}

int
node_line(const pdg::ProgramGraphs& g, int node)
{
  return g.pdg->node(node).range.begin.line;
}

std::string
site_str(const pdg::ProgramGraphs& g, const pdg::CallSite& site)
{
  const auto* fn = g.program->find_function(site.caller);
  if (!fn || site.instr < 0)
    return site.caller + ":exit";
  return site.caller + ":" + std::to_string(fn->instrs[static_cast<std::size_t>(site.instr)].range.begin.line);
}

TemporalRecord
temporal_record(const pdg::ProgramGraphs& g, const temporal::TemporalFinding& f)
{
  TemporalRecord r;
  r.kind = temporal::to_string(f.kind);
  r.functions = f.functions;
  for (const auto& s : f.sites)
    r.sites.push_back(site_str(g, s));
  r.detail = f.detail;
  if (f.witness && r.sites.empty())
  {
    r.sites.push_back(site_str(g, f.witness->start));
    r.sites.push_back(site_str(g, f.witness->end));
  }
  if (f.witness)
    for (const auto& st : f.witness->steps)
      r.witness.push_back(st.function + ":bb" + std::to_string(st.block));
  return r;
}

json
trace_json(const TraceRecord& t)
{
  return json{{"id", t.id},
              {"civ_class", t.civ_class},
              {"source",
               {{"function", t.source_function},
                {"field_path", t.source_field_path},
                {"origin", t.source_origin},
                {"value_kind", t.source_value_kind},
                {"node", t.source_node}}},
              {"sink",
               {{"function", t.sink_function},
                {"line", t.sink_line},
                {"column", t.sink_column},
                {"kind", t.sink_kind},
                {"operand_role", t.operand_role},
                {"node", t.sink_node}}},
              {"call_path", t.call_path},
              {"path", t.path},
              {"checks", t.checks},
              {"cond_num", t.checks.size()},
              {"post_sink_checks", t.post_sink_checks},
              {"controllable", t.controllable}};
}

TraceRecord
trace_from_json(const json& j)
{
  TraceRecord t;
  t.id = j.at("id");
  t.civ_class = j.at("civ_class");
  const auto& s = j.at("source");
  t.source_function = s.at("function");
  t.source_field_path = s.at("field_path");
  t.source_origin = s.at("origin");
  t.source_value_kind = s.at("value_kind");
  t.source_node = s.at("node");
  const auto& k = j.at("sink");
  t.sink_function = k.at("function");
  t.sink_line = k.at("line");
  t.sink_column = k.at("column");
  t.sink_kind = k.at("kind");
  t.operand_role = k.at("operand_role");
  t.sink_node = k.at("node");
  t.call_path = j.at("call_path").get<std::vector<std::string>>();
  t.path = j.at("path").get<std::vector<int>>();
  t.checks = j.at("checks").get<std::vector<int>>();
  t.post_sink_checks = j.at("post_sink_checks").get<std::vector<int>>();
  t.controllable = j.at("controllable");
  return t;
}

std::string
align(const std::vector<std::pair<std::string, std::string>>& rows)
{
  std::size_t width = 0;
  for (const auto& [label, value] : rows)
    width = std::max(width, label.size());
  std::ostringstream out;
  for (const auto& [label, value] : rows)
    out << "  " << label << std::string(width - label.size(), ' ') << " | " << value << "\n";
  return out.str();
}

} // namespace

TraceRecord
trace_record(const pdg::ProgramGraphs& g, const taint::TaintTrace& t)
{
  TraceRecord r;
  r.id = t.id;
  r.civ_class = taint::to_string(t.sink.civ_class);
  r.source_function = t.source.function;
  r.source_field_path = t.source.field_path;
  r.source_origin = taint::to_string(t.source.origin);
  r.source_value_kind = taint::to_string(t.source.value_kind);
  r.source_node = t.source.node;
  r.sink_function = t.sink.function;
  const auto& range = g.pdg->node(t.sink.node).range;
  r.sink_line = range.begin.line;
  r.sink_column = range.begin.column;
  r.sink_kind = t.sink.kind;
  r.operand_role = t.sink.operand_role;
  r.sink_node = t.sink.node;
  r.call_path = t.call_path;
  r.path = t.path;
  for (int c : t.checks)
    r.checks.push_back(node_line(g, c));
  for (int c : t.post_sink_checks)
    r.post_sink_checks.push_back(node_line(g, c));
  r.controllable = t.controllable;
  return r;
}

CivReport
build_report(const pdg::ProgramGraphs& g, const std::string& corpus_id, hardening::ModeName mode,
             const boundary::SharedFieldSet& shared, std::size_t shared_locks, const hardening::Findings& findings)
{
  CivReport r;
  r.tool_version = kToolVersion;
  r.corpus_id = corpus_id;
  r.mode = hardening::to_string(mode);
  r.enforced_properties = hardening::make_mode(mode).enforced_properties;
  r.oversharing = {shared.deep, shared.accessed, shared.shared};
  for (const auto& [c, n] : taint::quantify_shared_data(findings.traces))
    r.shared_data_counts[taint::to_string(c)] = n;
  r.concurrency_count = static_cast<int>(shared_locks);
  for (const auto& k : temporal_kinds())
    r.temporal_counts[k] = 0;
  for (const auto& t : findings.traces)
    (t.controllable ? r.traces : r.pruned_traces).push_back(trace_record(g, t));
  for (const auto& f : findings.temporal)
  {
    ++r.temporal_counts[temporal::to_string(f.kind)];
    r.temporal_findings.push_back(temporal_record(g, f));
  }
  r.metadata = {
    "shared-data counts are distinct (source field, sink node) pairs over controllable traces",
    "checks after the sink never prune a trace; they are listed under post_sink_checks",
    "a check prunes a trace when its condition is data-dependent on the tainted value feeding the sink or a may-alias "
    "load of it",
    "DM2 is not reduced under P5: callback return values are written by the driver directly",
    "the shared lock count is the same in every mode",
    "oversharing counts include boundary globals as parameter trees",
    "P5 temporal findings need a driver control-flow witness; a driver exit is a return from a configured driver "
    "export",
  };
  return r;
}

json
to_json(const CivReport& r)
{
  json j;
  j["civ_report"] = kSchemaVersion;
  j["tool_version"] = r.tool_version;
  j["corpus_id"] = r.corpus_id;
  j["mode"] = r.mode;
  j["enforced_properties"] = r.enforced_properties;
  j["oversharing"] = {{"deep", r.oversharing.deep}, {"accessed", r.oversharing.accessed}, {"shared", r.oversharing.shared}};
  j["shared_data_counts"] = r.shared_data_counts;
  j["concurrency_count"] = r.concurrency_count;
  j["temporal_counts"] = r.temporal_counts;
  j["traces"] = json::array();
  for (const auto& t : r.traces)
    j["traces"].push_back(trace_json(t));
  j["pruned_traces"] = json::array();
  for (const auto& t : r.pruned_traces)
    j["pruned_traces"].push_back(trace_json(t));
  j["temporal_findings"] = json::array();
  for (const auto& f : r.temporal_findings)
    j["temporal_findings"].push_back({{"kind", f.kind},
                                      {"functions", f.functions},
                                      {"sites", f.sites},
                                      {"detail", f.detail},
                                      {"witness", f.witness}});
  j["metadata"] = r.metadata;
  return j;
}

CivReport
report_from_json(const json& j)
{
  if (j.value("civ_report", 0) != kSchemaVersion)
    throw Error("SchemaError", "not a civ_report version " + std::to_string(kSchemaVersion) + " document");
  CivReport r;
  r.tool_version = j.at("tool_version");
  r.corpus_id = j.at("corpus_id");
  r.mode = j.at("mode");
  r.enforced_properties = j.at("enforced_properties").get<std::vector<std::string>>();
  const auto& o = j.at("oversharing");
  r.oversharing = {o.at("deep"), o.at("accessed"), o.at("shared")};
  r.shared_data_counts = j.at("shared_data_counts").get<std::map<std::string, int>>();
  r.concurrency_count = j.at("concurrency_count");
  r.temporal_counts = j.at("temporal_counts").get<std::map<std::string, int>>();
  for (const auto& t : j.at("traces"))
    r.traces.push_back(trace_from_json(t));
  for (const auto& t : j.at("pruned_traces"))
    r.pruned_traces.push_back(trace_from_json(t));
  for (const auto& f : j.at("temporal_findings"))
  {
    TemporalRecord t;
    t.kind = f.at("kind");
    t.functions = f.at("functions").get<std::vector<std::string>>();
    t.sites = f.at("sites").get<std::vector<std::string>>();
    t.detail = f.at("detail");
    t.witness = f.at("witness").get<std::vector<std::string>>();
    r.temporal_findings.push_back(std::move(t));
  }
  r.metadata = j.at("metadata").get<std::vector<std::string>>();
  return r;
}

std::string
emit_json(const CivReport& r)
{
  return to_json(r).dump(2) + "\n";
}

std::string
emit_table(const CivReport& r)
{
  std::ostringstream out;
  out << "Oversharing (mode " << r.mode << ")\n";
  out << "  deep=" << r.oversharing.deep << " accessed=" << r.oversharing.accessed
      << " shared=" << r.oversharing.shared << "\n\n";

  out << "Shared data corruption\n";
  std::vector<std::pair<std::string, std::string>> rows;
  for (auto c : taint::kAllClasses)
  {
    auto it = r.shared_data_counts.find(taint::to_string(c));
    rows.emplace_back(taint::describe(c), std::to_string(it == r.shared_data_counts.end() ? 0 : it->second));
  }
  out << align(rows) << "\n";

  out << "Shared locks\n";
  out << align({{"Corruptible shared locks", std::to_string(r.concurrency_count)}}) << "\n";

  out << "Temporal\n";
  rows.clear();
  for (const auto& k : temporal_kinds())
    if (auto it = r.temporal_counts.find(k); it != r.temporal_counts.end())
      rows.emplace_back(temporal_label(k), std::to_string(it->second));
  out << align(rows);
  return out.str();
}

std::string
emit_csv(const CivReport& r)
{
  std::ostringstream out;
  out << "class,mode,count\n";
  for (auto c : taint::kAllClasses)
  {
    auto it = r.shared_data_counts.find(taint::to_string(c));
    out << taint::to_string(c) << "," << r.mode << "," << (it == r.shared_data_counts.end() ? 0 : it->second) << "\n";
  }
  out << "shared_lock," << r.mode << "," << r.concurrency_count << "\n";
  for (const auto& k : temporal_kinds())
    if (auto it = r.temporal_counts.find(k); it != r.temporal_counts.end())
      out << k << "," << r.mode << "," << it->second << "\n";
  return out.str();
}

std::string
emit_trace_lines(const CivReport& r)
{
  std::ostringstream out;
  for (const auto* list : {&r.traces, &r.pruned_traces})
    for (const auto& t : *list)
    {
      json j{{"id", t.id},
             {"civ_class", t.civ_class},
             {"source", {{"function", t.source_function}, {"field_path", t.source_field_path}}},
             {"sink", {{"function", t.sink_function}, {"line", t.sink_line}, {"kind", t.sink_kind}}},
             {"call_path", t.call_path},
             {"cond_num", t.checks.size()},
             {"controllable", t.controllable},
             {"post_sink_checks", t.post_sink_checks}};
      out << j.dump() << "\n";
    }
  return out.str();
}

std::string
percent_reduction(int base, int hardened)
{
  if (base <= 0)
    return "0.0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * (base - hardened) / base);
  return buf;
}

std::vector<ReductionRow>
diff_modes(const CivReport& base, const CivReport& hardened)
{
  if (base.corpus_id != hardened.corpus_id)
    throw CorpusMismatch("reports describe different inputs (" + base.corpus_id + " vs " + hardened.corpus_id + ")");
  auto get = [](const std::map<std::string, int>& m, const std::string& k) {
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
  };
  std::vector<ReductionRow> rows;
  auto add = [&](const std::string& name, int b, int h) {
    if (h > b)
      throw MonotonicityViolation(name + " grows from " + std::to_string(b) + " (" + base.mode + ") to " +
                                  std::to_string(h) + " (" + hardened.mode + ")");
    rows.push_back({name, b, h, b - h, percent_reduction(b, h)});
  };
  for (auto c : taint::kAllClasses)
  {
    auto k = taint::to_string(c);
    add(k, get(base.shared_data_counts, k), get(hardened.shared_data_counts, k));
  }
  add("shared_lock", base.concurrency_count, hardened.concurrency_count);
  for (const auto& k : temporal_kinds())
    add(k, get(base.temporal_counts, k), get(hardened.temporal_counts, k));
  return rows;
}

std::string
emit_diff(const std::vector<ReductionRow>& rows, const std::string& base_mode, const std::string& hardened_mode)
{
  std::ostringstream out;
  out << "Reduction " << base_mode << " -> " << hardened_mode << "\n";
  std::size_t width = 0;
  for (const auto& r : rows)
    width = std::max(width, r.name.size());
  for (const auto& r : rows)
    out << "  " << r.name << std::string(width - r.name.size(), ' ') << " | " << r.base << " -> " << r.hardened
        << " | -" << r.reduction << " (" << r.percent << "%)\n";
  return out.str();
}

} // namespace civ::report
