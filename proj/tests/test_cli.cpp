#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <sys/wait.h>

using namespace civ;
using civtest::case_dir;
using civtest::case_inputs;

namespace {

struct Outcome
{
  int status = -1;
  std::string out;
  std::string err;
};

Outcome
run_cli(const cli::RunConfig& config)
{
  std::ostringstream out;
  std::ostringstream err;
  Outcome o;
  o.status = cli::run(config, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

cli::RunConfig
case_config(const std::string& name, const std::string& mode = "baseline")
{
  cli::RunConfig c;
  c.inputs = case_inputs(name);
  c.boundary_config = case_dir(name) + "/boundary.toml";
  c.mode = mode;
  return c;
}

std::filesystem::path
scratch(const std::string& name)
{
  auto dir = std::filesystem::temp_directory_path() / "civscan-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void
write(const std::filesystem::path& p, const std::string& text)
{
  std::ofstream(p) << text;
}

std::string
slurp(const std::filesystem::path& p)
{
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int
shell(const std::string& cmd)
{
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST(Cli, HappyPathWritesJsonToStdout)
{
  auto o = run_cli(case_config("divide_by_field"));
  EXPECT_EQ(o.status, 0) << o.err;
  auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j["civ_report"], 1);
  EXPECT_EQ(j["mode"], "baseline");
  EXPECT_EQ(j["shared_data_counts"]["AE1"], 1);
}

TEST(Cli, MissingConfigNamesTheFlag)
{
  auto c = case_config("divide_by_field");
  c.boundary_config.clear();
  auto o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.err.find("--config"), std::string::npos) << o.err;
  EXPECT_TRUE(o.out.empty());
}

TEST(Cli, ErrorsAreExitOneWithPositions)
{
  auto bad = scratch("bad.mker");
  write(bad, "int f( {\n");
  auto c = case_config("divide_by_field");
  c.inputs = {bad.string()};
  auto o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_TRUE(std::regex_search(o.err, std::regex("bad\\.mker:1:[0-9]+: ParseError"))) << o.err;

  write(bad, "int f(void) { return x; }\n");
  o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_TRUE(std::regex_search(o.err, std::regex("bad\\.mker:1:[0-9]+: TypeError"))) << o.err;

  write(bad, "int f(void) { return 1 $ 2; }\n");
  o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_TRUE(std::regex_search(o.err, std::regex("bad\\.mker:1:[0-9]+: LexError"))) << o.err;

  auto toml = scratch("bad.toml");
  write(toml, "[interface]\nkernel_imports = 3\n");
  c = case_config("divide_by_field");
  c.boundary_config = toml.string();
  o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_TRUE(std::regex_search(o.err, std::regex("bad\\.toml:[0-9]+:[0-9]+: ConfigError"))) << o.err;

  c = case_config("divide_by_field", "p3");
  o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_NE(o.err.find("--mode"), std::string::npos);
}

TEST(Cli, UnknownCalleeIsAUserError)
{
  auto src = scratch("k.mker");
  write(src, "void mystery(int x);\nint k(int a) { mystery(a); return 0; }\n");
  auto toml = scratch("k.toml");
  write(toml, "[interface]\nkernel_imports = [\"k\"]\n");
  cli::RunConfig c;
  c.inputs = {src.string()};
  c.boundary_config = toml.string();
  auto o = run_cli(c);
  EXPECT_EQ(o.status, 1);
  EXPECT_TRUE(std::regex_search(o.err, std::regex("k\\.mker:2:[0-9]+: UnknownCallee"))) << o.err;
}

TEST(Cli, ModesFormAMonotoneChain)
{
  for (const auto& name : civtest::corpus_cases())
  {
    std::vector<report::CivReport> reports;
    for (const char* mode : {"baseline", "cfi", "memsafe"})
    {
      auto o = run_cli(case_config(name, mode));
      ASSERT_EQ(o.status, 0) << name << o.err;
      reports.push_back(report::report_from_json(nlohmann::json::parse(o.out)));
    }
    EXPECT_NO_THROW(report::diff_modes(reports[0], reports[1])) << name;
    EXPECT_NO_THROW(report::diff_modes(reports[1], reports[2])) << name;
  }
}

TEST(Cli, FormatsAndOutputFile)
{
  auto c = case_config("mul_overflow");
  c.format = "table";
  auto o = run_cli(c);
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("AE2: Integer overflow/underflow"), std::string::npos);
  c.format = "csv";
  o = run_cli(c);
  EXPECT_NE(o.out.find("AE2,baseline,1\n"), std::string::npos);
  c.format = "yaml";
  EXPECT_EQ(run_cli(c).status, 1);

  c = case_config("mul_overflow");
  c.output = scratch("report.json").string();
  o = run_cli(c);
  EXPECT_EQ(o.status, 0);
  EXPECT_TRUE(o.out.empty());
  EXPECT_EQ(nlohmann::json::parse(slurp(c.output))["shared_data_counts"]["AE2"], 1);
}

TEST(Cli, DumpsAreWritten)
{
  auto c = case_config("check_after_sink");
  c.dump_ir = scratch("ir.txt").string();
  c.dump_pdg = scratch("pdg.json").string();
  c.emit_traces = scratch("traces.jsonl").string();
  ASSERT_EQ(run_cli(c).status, 0);
  EXPECT_NE(slurp(c.dump_ir).find("kmalloc_reserve"), std::string::npos);
  auto pdg = nlohmann::json::parse(slurp(c.dump_pdg));
  EXPECT_EQ(pdg["pdg_version"], 1);
  EXPECT_FALSE(pdg["nodes"].empty());
  std::istringstream lines(slurp(c.emit_traces));
  std::string line;
  int mem4 = 0;
  while (std::getline(lines, line))
  {
    auto j = nlohmann::json::parse(line);
    if (j["civ_class"] == "MEM4")
    {
      ++mem4;
      EXPECT_FALSE(j["post_sink_checks"].empty());
      EXPECT_EQ(j["cond_num"], 0);
    }
  }
  EXPECT_EQ(mem4, 2);
}

TEST(Cli, DiffOfSavedReports)
{
  auto base = case_config("bond_balanced");
  base.output = scratch("base.json").string();
  auto cfi = case_config("bond_balanced", "cfi");
  cfi.output = scratch("cfi.json").string();
  ASSERT_EQ(run_cli(base).status, 0);
  ASSERT_EQ(run_cli(cfi).status, 0);

  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(cli::run_diff(base.output, cfi.output, "csv", out, err), 0) << err.str();
  EXPECT_NE(out.str().find("unbalanced_alloc,1,0,1,100.0\n"), std::string::npos) << out.str();

  std::ostringstream out2;
  std::ostringstream err2;
  EXPECT_EQ(cli::run_diff(cfi.output, base.output, "table", out2, err2), 2);
  EXPECT_NE(err2.str().find("MonotonicityViolation"), std::string::npos);

  auto other = case_config("bond_leak", "cfi");
  other.output = scratch("other.json").string();
  ASSERT_EQ(run_cli(other).status, 0);
  std::ostringstream out3;
  std::ostringstream err3;
  EXPECT_EQ(cli::run_diff(base.output, other.output, "table", out3, err3), 1);
  EXPECT_NE(err3.str().find("CorpusMismatch"), std::string::npos);
}

TEST(Cli, BoundaryMetricsLine)
{
  std::ostringstream out;
  std::ostringstream err;
  EXPECT_EQ(cli::run_boundary_metrics(case_inputs("two_field_oversharing"),
                                      case_dir("two_field_oversharing") + "/boundary.toml", out, err),
            0);
  EXPECT_EQ(out.str(), "3,1,1\n");
}

TEST(Cli, CorpusIdDependsOnNamesAndContents)
{
  std::vector<frontend::SourceFile> a{{"x/k.mker", "int a;", std::nullopt}, {"x/d.mker", "int b;", std::nullopt}};
  std::vector<frontend::SourceFile> b{{"y/d.mker", "int b;", std::nullopt}, {"y/k.mker", "int a;", std::nullopt}};
  EXPECT_EQ(cli::corpus_id(a), cli::corpus_id(b));
  b[0].text = "int c;";
  EXPECT_NE(cli::corpus_id(a), cli::corpus_id(b));
}

TEST(Cli, ColorIsOptIn)
{
  auto c = case_config("divide_by_field");
  c.boundary_config.clear();
  setenv("CIVSCAN_COLOR", "1", 1);
  auto colored = run_cli(c);
  setenv("CIVSCAN_COLOR", "0", 1);
  auto plain = run_cli(c);
  unsetenv("CIVSCAN_COLOR");
  EXPECT_NE(colored.err.find("\033["), std::string::npos);
  EXPECT_EQ(plain.err.find("\033["), std::string::npos);
}

TEST(CliBinary, ExitStatuses)
{
  std::string bin = CIV_SCAN_BIN;
  std::string dir = case_dir("divide_by_field");
  std::string inputs = dir + "/kernel.mker " + dir + "/driver.mker";
  std::string quiet = " >/dev/null 2>&1";
  EXPECT_EQ(shell(bin + " analyze --config " + dir + "/boundary.toml " + inputs + " --mode baseline --format json" + quiet), 0);
  EXPECT_EQ(shell(bin + " analyze " + inputs + quiet), 1);
  EXPECT_EQ(shell(bin + " analyze --config " + dir + "/boundary.toml " + inputs + " --jobs nope" + quiet), 1);
  EXPECT_EQ(shell(bin + " boundary --metrics --config " + dir + "/boundary.toml " + inputs + quiet), 0);
  EXPECT_EQ(shell(bin + " --help" + quiet), 0);
}
