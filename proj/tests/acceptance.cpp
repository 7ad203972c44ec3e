// Acceptance suite: one GoogleTest suite per criterion, registered with ctest
// as AC1..AC8.
#include "helpers.hpp"

#include "civ/frontend/parser.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

using namespace civ;
using civtest::analyze_case;
using civtest::case_dir;
using civtest::case_inputs;
using civtest::corpus_cases;

namespace {

nlohmann::json
expected_for(const std::string& name)
{
  std::ifstream f(case_dir(name) + "/expected.json");
  return nlohmann::json::parse(f);
}

std::string
baseline_json(const std::string& name, int jobs, const std::string& mode = "baseline")
{
  cli::RunConfig c;
  c.inputs = case_inputs(name);
  c.boundary_config = case_dir(name) + "/boundary.toml";
  c.mode = mode;
  c.jobs = jobs;
  std::ostringstream out;
  std::ostringstream err;
  int status = cli::run(c, out, err);
  EXPECT_EQ(status, 0) << name << ": " << err.str();
  return out.str();
}

const std::vector<hardening::ModeName> kModes{hardening::ModeName::Baseline, hardening::ModeName::CfiP5,
                                              hardening::ModeName::MemsafeP6};

} // namespace

// AC1: every corpus case matches its hand-derived counts exactly.
TEST(AC1, CorpusOracle)
{
  auto cases = corpus_cases();
  ASSERT_GE(cases.size(), 12u);
  std::map<std::string, int> coverage;
  auto start = std::chrono::steady_clock::now();
  for (const auto& name : cases)
  {
    SCOPED_TRACE(name);
    auto want = expected_for(name);
    auto got = nlohmann::json::parse(baseline_json(name, 1));
    EXPECT_EQ(got["shared_data_counts"], want["shared_data_counts"]);
    EXPECT_EQ(got["concurrency_count"], want["concurrency_count"]);
    EXPECT_EQ(got["temporal_counts"], want["temporal_counts"]);
    if (want.contains("oversharing"))
      EXPECT_EQ(got["oversharing"], want["oversharing"]);
    for (const auto& [k, v] : want["shared_data_counts"].items())
      coverage[k] += v.get<int>();
    for (const auto& [k, v] : want["temporal_counts"].items())
      coverage[k] += v.get<int>();
    coverage["shared_lock"] += want["concurrency_count"].get<int>();
  }
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(seconds, 5.0);
  for (auto c : taint::kAllClasses)
    EXPECT_GT(coverage[taint::to_string(c)], 0) << taint::to_string(c);
  for (const char* k : {"SAC", "lock_never_unlock", "unbalanced_alloc", "shared_lock"})
    EXPECT_GT(coverage[k], 0) << k;
}

namespace {

struct MarkedGraph
{
  std::vector<pdg::PdgNode> nodes;
  std::vector<pdg::PdgEdge> edges;
  std::vector<int> sources;
  std::vector<int> sinks;
};

MarkedGraph
random_marked_graph(std::mt19937& rng)
{
  MarkedGraph g;
  int n = std::uniform_int_distribution<int>(1, 12)(rng);
  for (int i = 0; i < n; ++i)
  {
    pdg::PdgNode node;
    node.function = "f" + std::to_string(i % 3);
    node.instr = i;
    g.nodes.push_back(node);
  }
  int m = std::uniform_int_distribution<int>(0, 24)(rng);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_int_distribution<int> kind(0, 5);
  for (int i = 0; i < m; ++i)
    g.edges.push_back({pick(rng), pick(rng), static_cast<pdg::EdgeKind>(kind(rng))});
  std::bernoulli_distribution mark(0.3);
  for (int i = 0; i < n; ++i)
  {
    if (mark(rng))
      g.sources.push_back(i);
    if (mark(rng))
      g.sinks.push_back(i);
  }
  return g;
}

bool
carries_taint(pdg::EdgeKind k)
{
  return k == pdg::EdgeKind::DataDep || k == pdg::EdgeKind::Alias || k == pdg::EdgeKind::ParamIn ||
         k == pdg::EdgeKind::ParamOut;
}

void
dfs(const MarkedGraph& g, int v, std::vector<bool>& seen)
{
  seen[static_cast<std::size_t>(v)] = true;
  for (const auto& e : g.edges)
    if (e.src == v && carries_taint(e.kind) && !seen[static_cast<std::size_t>(e.dst)])
      dfs(g, e.dst, seen);
}

} // namespace

// AC2: propagate agrees with exhaustive DFS on random PDGs.
TEST(AC2, TaintOracleEquivalence)
{
  std::mt19937 rng(424242);
  int pairs = 0;
  for (int round = 0; round < 200; ++round)
  {
    auto g = random_marked_graph(rng);
    ASSERT_LE(g.nodes.size(), 12u);
    ASSERT_LE(g.edges.size(), 24u);
    auto pdg = pdg::Pdg::from_graph(g.nodes, g.edges);
    std::vector<taint::TaintSource> sources;
    for (int s : g.sources)
    {
      taint::TaintSource src;
      src.id = static_cast<int>(sources.size());
      src.node = s;
      src.field_path = "v" + std::to_string(s);
      sources.push_back(src);
    }
    std::vector<taint::SinkDescriptor> sinks;
    for (int s : g.sinks)
    {
      taint::SinkDescriptor d;
      d.id = static_cast<int>(sinks.size());
      d.civ_class = taint::CivClass::MEM4;
      d.node = s;
      d.triggers = {s};
      sinks.push_back(d);
    }
    std::set<std::pair<int, int>> got;
    for (const auto& t : taint::propagate(pdg, sources, sinks, 1 + round % 4))
      got.insert({t.source.node, t.sink.node});
    std::set<std::pair<int, int>> want;
    for (int s : g.sources)
    {
      std::vector<bool> seen(g.nodes.size(), false);
      dfs(g, s, seen);
      for (int k : g.sinks)
        if (seen[static_cast<std::size_t>(k)])
          want.insert({s, k});
    }
    EXPECT_EQ(got, want) << "round " << round;
    pairs += static_cast<int>(want.size());
  }
  EXPECT_GT(pairs, 0);
}

// AC3: pruning only removes traces, keeps post-sink-checked ones and drops a direct bound check.
TEST(AC3, PruningSoundness)
{
  for (const auto& name : corpus_cases())
  {
    SCOPED_TRACE(name);
    auto a = analyze_case(name);
    auto traces = a.traces;
    auto kept = taint::prune(a.graphs, traces);
    std::set<int> all_ids;
    for (const auto& t : traces)
      all_ids.insert(t.id);
    for (const auto& t : kept)
    {
      EXPECT_TRUE(all_ids.count(t.id));
      EXPECT_TRUE(t.controllable);
    }
    auto r = cli::make_report(a, hardening::ModeName::Baseline);
    EXPECT_EQ(r.traces.size() + r.pruned_traces.size(), traces.size());
    EXPECT_EQ(r.traces.size(), kept.size());
  }

  auto r = cli::make_report(analyze_case("check_after_sink"), hardening::ModeName::Baseline);
  int mem4 = 0;
  for (const auto& t : r.traces)
    if (t.civ_class == "MEM4")
    {
      ++mem4;
      EXPECT_TRUE(t.controllable);
      EXPECT_TRUE(t.checks.empty());
      EXPECT_EQ(t.post_sink_checks, std::vector<int>{9});
    }
  EXPECT_EQ(mem4, 2);

  auto b = cli::make_report(analyze_case("bounded_index"), hardening::ModeName::Baseline);
  ASSERT_EQ(b.pruned_traces.size(), 1u);
  EXPECT_EQ(b.pruned_traces[0].civ_class, "MEM2");
  EXPECT_EQ(b.pruned_traces[0].source_field_path, "idx");
  EXPECT_EQ(b.pruned_traces[0].checks, std::vector<int>{4});
  EXPECT_FALSE(b.pruned_traces[0].controllable);
  EXPECT_EQ(b.shared_data_counts.at("MEM2"), 0);
}

namespace {

struct RandomPair
{
  std::string kernel;
  std::string driver;
};

RandomPair
random_program(std::mt19937& rng)
{
  int nfields = std::uniform_int_distribution<int>(1, 4)(rng);
  std::bernoulli_distribution coin(0.5);
  bool nested = coin(rng);
  std::ostringstream types;
  types << "struct T { int u; int v; };\nstruct S {";
  std::vector<std::string> paths;
  for (int i = 0; i < nfields; ++i)
  {
    types << " int f" << i << ";";
    paths.push_back("m->f" + std::to_string(i));
  }
  if (nested)
  {
    types << " struct T *t;";
    paths.push_back("m->t->u");
    paths.push_back("m->t->v");
  }
  types << " };\n";
  auto body = [&] {
    std::ostringstream b;
    b << "  int x;\n  x = 0;\n";
    for (const auto& p : paths)
    {
      int roll = std::uniform_int_distribution<int>(0, 2)(rng);
      if (roll == 1)
        b << "  x = x + " << p << ";\n";
      else if (roll == 2)
        b << "  " << p << " = x;\n";
    }
    return b.str();
  };
  RandomPair p;
  p.kernel = types.str() + "void kfn(struct S *m) {\n" + body() + "}\n";
  p.driver = types.str() + "void kfn(struct S *m);\nvoid drv(struct S *m) {\n" + body() + "  kfn(m);\n}\n";
  return p;
}

} // namespace

// AC4: shared <= accessed <= deep everywhere; the two-field example is exact.
TEST(AC4, OversharingChain)
{
  for (const auto& name : corpus_cases())
  {
    auto a = analyze_case(name);
    EXPECT_LE(a.shared.shared, a.shared.accessed) << name;
    EXPECT_LE(a.shared.accessed, a.shared.deep) << name;
  }
  std::mt19937 rng(8086);
  auto spec_text = "[compartments]\nrules = [[\"drv.mker\", \"driver\"]]\n[interface]\nkernel_imports = [\"kfn\"]\n";
  for (int round = 0; round < 100; ++round)
  {
    auto p = random_program(rng);
    SCOPED_TRACE(p.kernel + p.driver);
    std::vector<frontend::SourceFile> files{{"krn.mker", p.kernel, std::nullopt}, {"drv.mker", p.driver, std::nullopt}};
    auto a = cli::analyze(files, boundary::parse_boundary_config(spec_text), 1);
    EXPECT_LE(a.shared.shared, a.shared.accessed);
    EXPECT_LE(a.shared.accessed, a.shared.deep);
    EXPECT_GT(a.shared.deep, 0u);
  }
  auto a = analyze_case("two_field_oversharing");
  EXPECT_EQ(a.shared.deep, 3u);
  EXPECT_EQ(a.shared.accessed, 1u);
  EXPECT_EQ(a.shared.shared, 1u);
}

// AC5: memsafe <= cfi <= baseline per class; the alloc pair survives P5 only with a bypass path.
TEST(AC5, ModeMonotonicity)
{
  for (const auto& name : corpus_cases())
  {
    SCOPED_TRACE(name);
    auto a = analyze_case(name);
    std::vector<report::CivReport> r;
    for (auto m : kModes)
      r.push_back(cli::make_report(a, m));
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
    {
      for (const auto& [k, v] : r[i].shared_data_counts)
        EXPECT_LE(r[i + 1].shared_data_counts.at(k), v) << k;
      for (const auto& [k, v] : r[i].temporal_counts)
        EXPECT_LE(r[i + 1].temporal_counts.at(k), v) << k;
      EXPECT_LE(r[i + 1].concurrency_count, r[i].concurrency_count);
      EXPECT_NO_THROW(report::diff_modes(r[i], r[i + 1]));
    }
    auto want = expected_for(name);
    if (want.contains("cfi_temporal_counts"))
    {
      EXPECT_EQ(nlohmann::json(r[1].temporal_counts), want["cfi_temporal_counts"]);
      EXPECT_EQ(r[2].temporal_counts, r[1].temporal_counts);
    }
  }
  auto leak = cli::make_report(analyze_case("bond_leak"), hardening::ModeName::CfiP5);
  EXPECT_EQ(leak.temporal_counts.at("unbalanced_alloc"), 1);
  auto balanced_a = analyze_case("bond_balanced");
  EXPECT_EQ(cli::make_report(balanced_a, hardening::ModeName::Baseline).temporal_counts.at("unbalanced_alloc"), 1);
  EXPECT_EQ(cli::make_report(balanced_a, hardening::ModeName::CfiP5).temporal_counts.at("unbalanced_alloc"), 0);
}

// AC6: baseline SAC = |spinlock imports| x |sleepable imports|.
TEST(AC6, SacClosedForm)
{
  std::mt19937 rng(1337);
  const std::vector<std::string> pool{"spin_lock", "spin_lock_bh", "raw_spin_lock", "msleep", "schedule",
                                      "wait_for_completion", "mutex_lock", "copy_to_user", "udelay", "kfree"};
  std::bernoulli_distribution third(1.0 / 3);
  std::bernoulli_distribution most(0.7);
  std::uniform_int_distribution<std::size_t> any(0, pool.size() - 1);
  auto list = [](const std::set<std::string>& names) {
    std::string s = "[";
    for (const auto& n : names)
      s += (s.size() > 1 ? ", \"" : "\"") + n + "\"";
    return s + "]";
  };
  std::size_t total = 0;
  for (int round = 0; round < 20; ++round)
  {
    std::set<std::string> spin;
    std::set<std::string> sleep;
    std::set<std::string> imports;
    std::ostringstream kernel;
    for (const auto& name : pool)
    {
      kernel << "void " << name << "(int x);\n";
      if (third(rng))
        spin.insert(name);
      if (third(rng))
        sleep.insert(name);
      if (most(rng))
        imports.insert(name);
    }
    // Kernel wrappers are sleepable when the function they call is.
    std::set<std::string> sleepy_imports;
    for (int w = 0; w < 3; ++w)
    {
      std::string wrapper = "wrap" + std::to_string(w);
      const auto& target = pool[any(rng)];
      kernel << "void " << wrapper << "(int x) {\n  " << target << "(x);\n}\n";
      if (most(rng))
      {
        imports.insert(wrapper);
        if (sleep.count(target))
          sleepy_imports.insert(wrapper);
      }
    }
    std::size_t n_spin = 0;
    for (const auto& name : imports)
    {
      n_spin += spin.count(name);
      if (sleep.count(name))
        sleepy_imports.insert(name);
    }
    std::string spin_entries = "[";
    for (const auto& n : spin)
      spin_entries += (spin_entries.size() > 1 ? ", [\"" : "[\"") + n + "\", [0]]";
    spin_entries += "]";
    std::string config = "[interface]\nkernel_imports = " + list(imports) +
                         "\nexternals = " + list(std::set<std::string>(pool.begin(), pool.end())) + "\n[api_classes]\nspinlock_acquire = " +
                         spin_entries + "\nsleepable = " + list(sleep) + "\n";
    SCOPED_TRACE(config);
    std::vector<frontend::SourceFile> files{{"kernel.mker", kernel.str(), std::nullopt}};
    auto a = cli::analyze(files, boundary::parse_boundary_config(config), 1);
    auto r = cli::make_report(a, hardening::ModeName::Baseline);
    EXPECT_EQ(static_cast<std::size_t>(r.temporal_counts.at("SAC")), n_spin * sleepy_imports.size());
    total += n_spin * sleepy_imports.size();
  }
  EXPECT_GT(total, 0u);
}

// AC7: report bytes do not depend on the worker count.
TEST(AC7, Determinism)
{
  for (const auto& name : corpus_cases())
    for (const char* mode : {"baseline", "cfi", "memsafe"})
    {
      auto one = baseline_json(name, 1, mode);
      auto many = baseline_json(name, 8, mode);
      EXPECT_FALSE(one.empty());
      EXPECT_EQ(one, many) << name << " " << mode;
    }
}

namespace {

pdg::Digraph
random_cfg(std::mt19937& rng)
{
  pdg::Digraph g;
  g.size = std::uniform_int_distribution<int>(1, 12)(rng);
  g.succ.resize(static_cast<std::size_t>(g.size));
  std::uniform_int_distribution<int> node(0, g.size - 1);
  std::uniform_int_distribution<int> degree(0, 2);
  for (int v = 0; v < g.size; ++v)
  {
    auto& out = g.succ[static_cast<std::size_t>(v)];
    for (int k = degree(rng); k > 0; --k)
      if (int s = node(rng); std::find(out.begin(), out.end(), s) == out.end())
        out.push_back(s);
    if (out.empty())
      g.exits.push_back(v);
  }
  return g;
}

// Postdominator sets by enumeration: a postdominates b when deleting a cuts
// every path from b to the exit. Blocks that cannot reach an exit at all are
// joined to it first.
std::set<std::pair<int, int>>
brute_control_dependence(const pdg::Digraph& g)
{
  int n = g.size;
  auto succ = g.succ;
  succ.emplace_back();
  for (int e : g.exits)
    succ[static_cast<std::size_t>(e)].push_back(n);
  auto reaches_exit = [&](int from, int removed) {
    if (from == removed)
      return false;
    std::vector<bool> seen(static_cast<std::size_t>(n + 1));
    std::vector<int> todo{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!todo.empty())
    {
      int v = todo.back();
      todo.pop_back();
      if (v == n)
        return true;
      for (int s : succ[static_cast<std::size_t>(v)])
        if (s != removed && !seen[static_cast<std::size_t>(s)])
        {
          seen[static_cast<std::size_t>(s)] = true;
          todo.push_back(s);
        }
    }
    return false;
  };
  std::vector<bool> live(static_cast<std::size_t>(n));
  std::vector<int> todo{g.entry};
  live[static_cast<std::size_t>(g.entry)] = true;
  while (!todo.empty())
  {
    int v = todo.back();
    todo.pop_back();
    for (int s : g.succ[static_cast<std::size_t>(v)])
      if (!live[static_cast<std::size_t>(s)])
      {
        live[static_cast<std::size_t>(s)] = true;
        todo.push_back(s);
      }
  }
  std::vector<int> stuck;
  for (int v = 0; v < n; ++v)
    if (live[static_cast<std::size_t>(v)] && !reaches_exit(v, -1))
      stuck.push_back(v);
  for (int v : stuck)
    succ[static_cast<std::size_t>(v)].push_back(n);

  std::vector<std::set<int>> pdoms(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a)
      if (a == b || !reaches_exit(b, a))
        pdoms[static_cast<std::size_t>(b)].insert(a);

  std::set<std::pair<int, int>> out;
  for (int c = 0; c < n; ++c)
  {
    if (!live[static_cast<std::size_t>(c)])
      continue;
    for (int s : succ[static_cast<std::size_t>(c)])
    {
      if (s == n)
        continue;
      for (int b : pdoms[static_cast<std::size_t>(s)])
        if (b == c || !pdoms[static_cast<std::size_t>(c)].count(b))
          out.emplace(c, b);
    }
  }
  return out;
}

} // namespace

// AC8: print/parse round trip on the corpus; control dependence against enumeration.
TEST(AC8, FrontendRoundTripAndControlDependence)
{
  int files = 0;
  for (const auto& name : corpus_cases())
    for (const auto& path : case_inputs(name))
    {
      SCOPED_TRACE(path);
      auto first = frontend::parse(frontend::read_source_file(path));
      auto printed = frontend::print(first);
      auto second = frontend::parse(frontend::SourceFile{path, printed, std::nullopt});
      EXPECT_EQ(frontend::dump_structure(first), frontend::dump_structure(second));
      EXPECT_EQ(frontend::print(second), printed);
      ++files;
    }
  EXPECT_GE(files, 24);

  std::mt19937 rng(31337);
  for (int round = 0; round < 100; ++round)
  {
    auto g = random_cfg(rng);
    ASSERT_LE(g.size, 12);
    auto dom = pdg::compute_dominance(g);
    auto cd = pdg::control_dependence(g, dom);
    std::set<std::pair<int, int>> got(cd.begin(), cd.end());
    EXPECT_EQ(got, brute_control_dependence(g)) << "round " << round;
  }
}
