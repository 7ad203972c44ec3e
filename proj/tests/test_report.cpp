#include "helpers.hpp"

#include "civ/report/report.hpp"

#include <gtest/gtest.h>

#include <regex>
#include <sstream>

using namespace civ;
using namespace civ::report;
using civtest::analyze_case;
using civtest::corpus_cases;

namespace {

std::string
squeeze(const std::string& s)
{
  return std::regex_replace(s, std::regex("[ \t]+"), " ");
}

CivReport
hand_report()
{
  CivReport r;
  r.tool_version = kToolVersion;
  r.corpus_id = "abc";
  r.mode = "baseline";
  r.enforced_properties = {"P1", "P2", "P3-partial", "P4"};
  r.oversharing = {3, 1, 1};
  for (auto c : taint::kAllClasses)
    r.shared_data_counts[taint::to_string(c)] = 0;
  r.shared_data_counts["MEM1"] = 2;
  for (const auto& k : temporal_kinds())
    r.temporal_counts[k] = 0;
  TraceRecord t;
  t.id = 4;
  t.civ_class = "MEM1";
  t.source_function = "kfn";
  t.source_field_path = "m->head";
  t.source_origin = "shared-field";
  t.source_value_kind = "pointer";
  t.source_node = 7;
  t.sink_function = "kfn";
  t.sink_line = 12;
  t.sink_column = 3;
  t.sink_kind = "store";
  t.operand_role = "address";
  t.sink_node = 19;
  t.call_path = {"kfn", "helper"};
  t.path = {7, 11, 19};
  t.checks = {10};
  t.post_sink_checks = {14, 15};
  r.traces.push_back(t);
  t.id = 5;
  t.controllable = false;
  r.pruned_traces.push_back(t);
  r.temporal_findings.push_back({"SAC", {"spin_lock", "msleep"}, {"drv:4"}, "tx_lock", {"drv:bb0", "drv:bb1"}});
  r.metadata = {"note"};
  return r;
}

std::map<std::string, int>
zero_counts()
{
  std::map<std::string, int> m;
  for (auto c : taint::kAllClasses)
    m[taint::to_string(c)] = 0;
  return m;
}

} // namespace

TEST(Table, ClassRowAndOversharingLine)
{
  auto text = squeeze(emit_table(hand_report()));
  EXPECT_NE(text.find("MEM1: Pointer value | 2"), std::string::npos) << text;
  EXPECT_NE(text.find("deep=3 accessed=1 shared=1"), std::string::npos) << text;
}

TEST(Table, SectionsInOrderAndTemporalZerosPrinted)
{
  auto text = squeeze(emit_table(hand_report()));
  auto over = text.find("Oversharing");
  auto data = text.find("Shared data corruption");
  auto locks = text.find("Shared locks");
  auto temp = text.find("Temporal");
  ASSERT_NE(temp, std::string::npos);
  EXPECT_LT(over, data);
  EXPECT_LT(data, locks);
  EXPECT_LT(locks, temp);
  EXPECT_NE(text.find("SAC: Sleep in atomic context | 0"), std::string::npos);
  EXPECT_NE(text.find("Lock and never unlock | 0"), std::string::npos);
  EXPECT_NE(text.find("Unbalanced allocation/deallocation | 0"), std::string::npos);
}

TEST(Table, RowsAreAligned)
{
  std::istringstream in(emit_table(hand_report()));
  std::string line;
  std::set<std::size_t> bars;
  bool in_data = false;
  while (std::getline(in, line))
  {
    if (line == "Shared data corruption")
      in_data = true;
    else if (line.empty())
      in_data = false;
    else if (in_data)
      bars.insert(line.find(" | "));
  }
  EXPECT_EQ(bars.size(), 1u);
}

TEST(Json, HandReportRoundTrips)
{
  auto r = hand_report();
  auto back = report_from_json(nlohmann::json::parse(emit_json(r)));
  EXPECT_EQ(back, r);
  auto j = nlohmann::json::parse(emit_json(r));
  EXPECT_EQ(j["civ_report"], kSchemaVersion);
  EXPECT_EQ(j["pruned_traces"].size(), 1u);
  EXPECT_EQ(j["traces"][0]["cond_num"], 1);
}

TEST(Json, CorpusReportsRoundTripInEveryMode)
{
  for (const auto& name : corpus_cases())
  {
    SCOPED_TRACE(name);
    auto a = analyze_case(name);
    for (auto mode : {hardening::ModeName::Baseline, hardening::ModeName::CfiP5, hardening::ModeName::MemsafeP6})
    {
      auto r = cli::make_report(a, mode);
      auto text = emit_json(r);
      EXPECT_EQ(report_from_json(nlohmann::json::parse(text)), r);
      EXPECT_EQ(emit_json(report_from_json(nlohmann::json::parse(text))), text);
      EXPECT_EQ(r.mode, hardening::to_string(mode));
      EXPECT_EQ(r.enforced_properties, hardening::make_mode(mode).enforced_properties);
    }
  }
}

TEST(Json, RejectsOtherSchemas)
{
  EXPECT_THROW(report_from_json(nlohmann::json{{"civ_report", 2}}), Error);
  EXPECT_THROW(report_from_json(nlohmann::json::object()), Error);
}

TEST(Csv, OneRowPerClassModeAndCount)
{
  auto text = emit_csv(hand_report());
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "class,mode,count");
  int rows = 0;
  while (std::getline(in, line))
  {
    ++rows;
    EXPECT_TRUE(std::regex_match(line, std::regex("[A-Za-z0-9_]+,baseline,[0-9]+"))) << line;
  }
  EXPECT_EQ(rows, 10 + 1 + 3);
  EXPECT_NE(text.find("MEM1,baseline,2\n"), std::string::npos);
}

TEST(TraceLines, CarryTheDocumentedFields)
{
  auto text = emit_trace_lines(hand_report());
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line))
  {
    auto j = nlohmann::json::parse(line);
    for (const char* key : {"id", "civ_class", "source", "sink", "call_path", "cond_num", "controllable", "post_sink_checks"})
      EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["source"]["field_path"], "m->head");
    EXPECT_EQ(j["sink"]["line"], 12);
    EXPECT_EQ(j["cond_num"], 1);
    ++n;
  }
  EXPECT_EQ(n, 2);
}

TEST(Diff, PercentHasOneDecimal)
{
  EXPECT_EQ(percent_reduction(48, 2), "95.8");
  EXPECT_EQ(percent_reduction(3, 3), "0.0");
  EXPECT_EQ(percent_reduction(0, 0), "0.0");
  EXPECT_EQ(percent_reduction(3, 0), "100.0");

  auto base = hand_report();
  base.temporal_counts["unbalanced_alloc"] = 48;
  auto hard = base;
  hard.mode = "cfi_p5";
  hard.temporal_counts["unbalanced_alloc"] = 2;
  auto rows = diff_modes(base, hard);
  auto it = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.name == "unbalanced_alloc"; });
  ASSERT_NE(it, rows.end());
  EXPECT_EQ(it->reduction, 46);
  EXPECT_EQ(it->percent, "95.8");
  EXPECT_NE(emit_diff(rows, "baseline", "cfi_p5").find("-46 (95.8%)"), std::string::npos);
}

TEST(Diff, IdenticalReportsGiveZeroTable)
{
  for (const auto& name : corpus_cases())
  {
    auto r = cli::make_report(analyze_case(name), hardening::ModeName::CfiP5);
    for (const auto& row : diff_modes(r, r))
    {
      EXPECT_EQ(row.reduction, 0) << name << " " << row.name;
      EXPECT_EQ(row.percent, "0.0");
    }
  }
}

TEST(Diff, GrowthIsAMonotonicityViolation)
{
  auto base = hand_report();
  auto hard = base;
  hard.shared_data_counts["AE1"] = 1;
  EXPECT_THROW(diff_modes(base, hard), MonotonicityViolation);
  hard = base;
  hard.concurrency_count = 1;
  EXPECT_THROW(diff_modes(base, hard), MonotonicityViolation);
}

TEST(Diff, DifferentCorporaAreRejected)
{
  auto base = hand_report();
  auto other = base;
  other.corpus_id = "def";
  EXPECT_THROW(diff_modes(base, other), CorpusMismatch);
}

TEST(Build, KindFilterKeepsOneTemporalKind)
{
  auto a = analyze_case("sleep_in_atomic");
  auto all = cli::make_report(a, hardening::ModeName::Baseline);
  EXPECT_EQ(all.temporal_counts.at("SAC"), 1);
  EXPECT_EQ(all.temporal_counts.at("lock_never_unlock"), 1);
  auto sac = cli::make_report(a, hardening::ModeName::Baseline, temporal::TemporalKind::Sac);
  EXPECT_EQ(sac.temporal_counts, (std::map<std::string, int>{{"SAC", 1}}));
  ASSERT_EQ(sac.temporal_findings.size(), 1u);
  EXPECT_EQ(sac.temporal_findings[0].kind, "SAC");
  EXPECT_EQ(sac.temporal_findings[0].functions, (std::vector<std::string>{"spin_lock", "msleep"}));
}

TEST(Build, TraceRecordsPointAtSourceLines)
{
  auto a = analyze_case("divide_by_field");
  auto r = cli::make_report(a, hardening::ModeName::Baseline);
  ASSERT_EQ(r.traces.size(), 1u);
  const auto& t = r.traces[0];
  EXPECT_EQ(t.civ_class, "AE1");
  EXPECT_EQ(t.source_field_path, "c->div");
  EXPECT_EQ(t.sink_function, "clk_period");
  EXPECT_EQ(t.sink_line, 4);
  EXPECT_EQ(t.sink_kind, "div");
  EXPECT_EQ(t.call_path, std::vector<std::string>{"clk_period"});
  EXPECT_TRUE(r.pruned_traces.empty());
  EXPECT_EQ(r.shared_data_counts, [] {
    auto m = zero_counts();
    m["AE1"] = 1;
    return m;
  }());
}
