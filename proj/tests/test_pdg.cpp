#include "civ/frontend/lower.hpp"
#include "civ/frontend/parser.hpp"
#include "civ/pdg/graphs.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>

using namespace civ;
using namespace civ::frontend;
using namespace civ::pdg;

namespace {

ProgramGraphs
graphs_of(const std::string& text)
{
  return build_graphs(lower(parse(SourceFile{"t.mker", text, std::nullopt})));
}

// Postdominance by exhaustive path search: a postdominates b iff b cannot
// reach the unified exit once a is removed.
struct BruteCd
{
  int n;
  std::vector<std::vector<int>> succ;
  std::vector<bool> reach;

  explicit BruteCd(const Digraph& g) : n(g.size), succ(g.succ), reach(static_cast<std::size_t>(g.size), false)
  {
    succ.emplace_back();
    for (int e : g.exits)
      succ[static_cast<std::size_t>(e)].push_back(n);
    std::vector<int> stack{g.entry};
    reach[static_cast<std::size_t>(g.entry)] = true;
    while (!stack.empty())
    {
      int v = stack.back();
      stack.pop_back();
      for (int s : g.succ[static_cast<std::size_t>(v)])
        if (!reach[static_cast<std::size_t>(s)])
        {
          reach[static_cast<std::size_t>(s)] = true;
          stack.push_back(s);
        }
    }
    std::vector<int> stuck;
    for (int v = 0; v < n; ++v)
      if (reach[static_cast<std::size_t>(v)] && !reaches_exit(v, -1))
        stuck.push_back(v);
    for (int v : stuck)
      succ[static_cast<std::size_t>(v)].push_back(n);
  }

  bool
  reaches_exit(int from, int removed) const
  {
    if (from == removed)
      return false;
    std::vector<bool> seen(static_cast<std::size_t>(n + 1), false);
    std::vector<int> stack{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!stack.empty())
    {
      int v = stack.back();
      stack.pop_back();
      if (v == n)
        return true;
      for (int s : succ[static_cast<std::size_t>(v)])
        if (s != removed && !seen[static_cast<std::size_t>(s)])
        {
          seen[static_cast<std::size_t>(s)] = true;
          stack.push_back(s);
        }
    }
    return false;
  }

  bool pdom(int a, int b) const { return a == b || !reaches_exit(b, a); }

  std::set<std::pair<int, int>>
  edges() const
  {
    std::set<std::pair<int, int>> out;
    for (int c = 0; c < n; ++c)
    {
      if (!reach[static_cast<std::size_t>(c)])
        continue;
      for (int b = 0; b < n; ++b)
      {
        if (b != c && pdom(b, c))
          continue;
        for (int s : succ[static_cast<std::size_t>(c)])
          if (s < n && pdom(b, s))
            out.emplace(c, b);
      }
    }
    return out;
  }
};

Digraph
random_cfg(std::mt19937& rng)
{
  Digraph g;
  g.size = std::uniform_int_distribution<int>(1, 12)(rng);
  g.succ.resize(static_cast<std::size_t>(g.size));
  std::uniform_int_distribution<int> node(0, g.size - 1);
  std::uniform_int_distribution<int> degree(0, 2);
  for (int v = 0; v < g.size; ++v)
  {
    int d = degree(rng);
    for (int k = 0; k < d; ++k)
    {
      int s = node(rng);
      if (std::find(g.succ[static_cast<std::size_t>(v)].begin(), g.succ[static_cast<std::size_t>(v)].end(), s) ==
          g.succ[static_cast<std::size_t>(v)].end())
        g.succ[static_cast<std::size_t>(v)].push_back(s);
    }
    if (g.succ[static_cast<std::size_t>(v)].empty())
      g.exits.push_back(v);
  }
  return g;
}

const PdgNode*
find_instr(const ProgramGraphs& g, const std::string& fn, Opcode op, int nth = 0)
{
  for (const auto& ins : g.program->find_function(fn)->instrs)
    if (ins.op == op && nth-- == 0)
      return &g.pdg->node(g.pdg->instr_node(fn, ins.id));
  return nullptr;
}

const Instr&
instr_of(const ProgramGraphs& g, const PdgNode& n)
{
  return g.program->find_function(n.function)->instrs[static_cast<std::size_t>(n.instr)];
}

bool
path_exists(const Cfg& cfg, int from_block, int to_block)
{
  std::vector<bool> seen(static_cast<std::size_t>(cfg.num_blocks()), false);
  std::vector<int> stack(cfg.graph.succ[static_cast<std::size_t>(from_block)]);
  while (!stack.empty())
  {
    int v = stack.back();
    stack.pop_back();
    if (v == to_block)
      return true;
    if (seen[static_cast<std::size_t>(v)])
      continue;
    seen[static_cast<std::size_t>(v)] = true;
    for (int s : cfg.graph.succ[static_cast<std::size_t>(v)])
      stack.push_back(s);
  }
  return false;
}

// Independent reaching-definitions walk over variables and memory.
void
check_def_use(const ProgramGraphs& g)
{
  const Pdg& pdg = *g.pdg;
  const PointsTo& pt = *g.pt;
  for (const IRFunction* fn : g.program->functions())
  {
    const Cfg& cfg = g.cfg(fn->name);
    const FunctionInfo& info = pdg.function(fn->name);
    std::set<std::pair<int, int>> expected_var;
    std::set<std::pair<int, int>> expected_mem;

    auto var_defs_before = [&](int block, int index, const std::string& v) {
      std::set<int> defs;
      std::set<int> seen_ends;
      std::function<void(int, int)> walk = [&](int b, int i) {
        const auto& ids = fn->blocks[static_cast<std::size_t>(b)].instrs;
        for (int k = i - 1; k >= 0; --k)
        {
          const Instr& ins = fn->instrs[static_cast<std::size_t>(ids[static_cast<std::size_t>(k)])];
          if (ins.op == Opcode::Assign && ins.var == v)
          {
            defs.insert(pdg.instr_node(fn->name, ins.id));
            return;
          }
        }
        if (b == 0)
        {
          for (std::size_t p = 0; p < fn->params.size(); ++p)
            if (fn->params[p].name == v)
              defs.insert(info.formal_in[p][0]);
          return;
        }
        for (int p : cfg.pred[static_cast<std::size_t>(b)])
          if (cfg.reachable(p) && seen_ends.insert(p).second)
            walk(p, static_cast<int>(fn->blocks[static_cast<std::size_t>(p)].instrs.size()));
      };
      walk(block, index);
      return defs;
    };

    for (const auto& block : fn->blocks)
    {
      if (!cfg.reachable(block.id))
        continue;
      for (std::size_t k = 0; k < block.instrs.size(); ++k)
      {
        const Instr& use = fn->instrs[static_cast<std::size_t>(block.instrs[k])];
        int use_node = pdg.instr_node(fn->name, use.id);
        for (const auto& op : use.args)
          if (op.is_var())
            for (int d : var_defs_before(block.id, static_cast<int>(k), op.name))
              expected_var.emplace(d, use_node);
        if (use.op != Opcode::Load)
          continue;
        std::set<int> read = pt.operand_pts(fn->name, use.args[0]);
        for (const auto& sb : fn->blocks)
        {
          if (!cfg.reachable(sb.id))
            continue;
          for (std::size_t j = 0; j < sb.instrs.size(); ++j)
          {
            const Instr& st = fn->instrs[static_cast<std::size_t>(sb.instrs[j])];
            if (st.op != Opcode::Store)
              continue;
            bool overlap = false;
            for (int l : pt.operand_pts(fn->name, st.args[0]))
              overlap = overlap || (read.count(l) && pt.loc(l).kind != LocKind::Var);
            bool ordered = (sb.id == block.id && j < k) || path_exists(cfg, sb.id, block.id);
            if (overlap && ordered)
              expected_mem.emplace(pdg.instr_node(fn->name, st.id), use_node);
          }
        }
      }
    }

    std::set<std::pair<int, int>> actual_var;
    std::set<std::pair<int, int>> actual_mem;
    for (const auto& e : pdg.edges())
    {
      const PdgNode& src = pdg.node(e.src);
      const PdgNode& dst = pdg.node(e.dst);
      if (src.function != fn->name || dst.function != fn->name || dst.kind != NodeKind::Instr)
        continue;
      bool var_src = (src.kind == NodeKind::FormalIn && src.tree_node == 0) ||
                     (src.kind == NodeKind::Instr && instr_of(g, src).op == Opcode::Assign);
      if (e.kind == EdgeKind::DataDep && var_src)
        actual_var.emplace(e.src, e.dst);
      if (e.kind == EdgeKind::Alias && src.kind == NodeKind::Instr && instr_of(g, src).op == Opcode::Store &&
          instr_of(g, dst).op == Opcode::Load)
        actual_mem.emplace(e.src, e.dst);
    }
    EXPECT_EQ(actual_var, expected_var) << fn->name;
    EXPECT_EQ(actual_mem, expected_mem) << fn->name;
  }
}

const char* kLoopSource = R"(
struct edac_layer { int size; };
struct mem_ctl_info { int n_layers; struct edac_layer *layers; };
void report(int pos);
void edac_mc_handle_error(struct mem_ctl_info *m, int *pos) {
  int i;
  for (i = 0; i < m->n_layers; i++) {
    if (pos[i] >= m->layers[i].size) {
      report(pos[i]);
    }
  }
}
)";

const char* kAliasSource = R"(
struct box { int *f; };
int *pick(struct box *s, int c) {
  struct box *t;
  int x;
  int *r;
  t = s;
  if (c) { t = s; }
  s->f = &x;
  r = t->f;
  *r = 3;
  x = *r + c;
  while (c > 0) {
    c = c - 1;
    *r = c;
  }
  return r;
}
)";

const char* kCallbackSource = R"(
struct device { int id; };
struct driver_ops { int (*probe)(struct device *d); };
struct driver_ops ops;
int retval;
int my_probe(struct device *d) {
  retval = d->id;
  return retval;
}
void register_driver(void) {
  ops.probe = &my_probe;
}
int really_probe(struct device *dev) {
  int ret;
  ret = ops.probe(dev);
  if (ret) {
    return 1;
  }
  return 0;
}
)";

} // namespace

TEST(Cfg, StraightLineIsOneBlock)
{
  auto g = graphs_of("int f(int a) { int x; int y; x = a; y = x; return y; }");
  const Cfg& cfg = g.cfg("f");
  EXPECT_EQ(cfg.num_blocks(), 1);
  EXPECT_TRUE(cfg.graph.succ[0].empty());
  EXPECT_EQ(cfg.graph.exits, std::vector<int>{0});
}

TEST(Cfg, LoopHasBackEdgeAndHeaderIsPostdominatedByExit)
{
  auto g = graphs_of(kLoopSource);
  const IRFunction& fn = *g.program->find_function("edac_mc_handle_error");
  const Cfg& cfg = g.cfg(fn.name);
  ASSERT_EQ(cfg.loops.size(), 1u);
  int header = cfg.loops[0].header;
  bool back_edge = false;
  for (int b : cfg.loops[0].body)
    for (int s : cfg.graph.succ[static_cast<std::size_t>(b)])
      back_edge = back_edge || (s == header && cfg.dom.dominates(header, b));
  EXPECT_TRUE(back_edge);
  ASSERT_EQ(cfg.graph.exits.size(), 1u);
  EXPECT_TRUE(cfg.dom.postdominates(cfg.graph.exits[0], header));
  EXPECT_TRUE(cfg.is_loop_branch(header));
}

TEST(Cfg, EarlyReturnAddsVirtualExit)
{
  auto g = graphs_of("int f(int c) { if (c) { return 1; } return 0; }");
  const Cfg& cfg = g.cfg("f");
  EXPECT_EQ(cfg.graph.exits.size(), 2u);
  EXPECT_EQ(cfg.dom.ipdom[0], cfg.dom.virtual_exit);
}

TEST(Cfg, ControlDependenceMatchesExhaustivePostdominators)
{
  std::mt19937 rng(20241015);
  for (int round = 0; round < 300; ++round)
  {
    Digraph g = random_cfg(rng);
    Dominance dom = compute_dominance(g);
    auto cd = control_dependence(g, dom);
    std::set<std::pair<int, int>> actual(cd.begin(), cd.end());
    ASSERT_EQ(actual, BruteCd(g).edges()) << "round " << round;
  }
}

TEST(PointsTo, DirectInclusion)
{
  auto g = graphs_of("void f(void) { int x; int *p; int *q; p = &x; q = p; }");
  int x = g.pt->var("f", "x");
  EXPECT_TRUE(g.pt->pts(g.pt->var("f", "q")).count(x));
}

TEST(PointsTo, FieldStoreThroughAlias)
{
  auto g = graphs_of(kAliasSource);
  int x = g.pt->var("pick", "x");
  EXPECT_TRUE(g.pt->pts(g.pt->var("pick", "r")).count(x));
  EXPECT_EQ(g.pt->pts(g.pt->var("pick", "t")), g.pt->pts(g.pt->var("pick", "s")));
}

TEST(PointsTo, AllocationSitesStayDisjoint)
{
  auto g = graphs_of(R"(
void *kmalloc(long size, int flags);
void f(void) {
  int *a;
  int *b;
  a = kmalloc(4, 0);
  b = kmalloc(4, 0);
}
)");
  const auto& pa = g.pt->pts(g.pt->var("f", "a"));
  const auto& pb = g.pt->pts(g.pt->var("f", "b"));
  ASSERT_EQ(pa.size(), 1u);
  ASSERT_EQ(pb.size(), 1u);
  EXPECT_NE(*pa.begin(), *pb.begin());
  EXPECT_EQ(g.pt->loc(*pa.begin()).kind, LocKind::Alloc);
}

TEST(ParamTree, AggregateParameterHasRootAndTwoFields)
{
  auto g = graphs_of("struct S { int a; int b; }; int f(struct S *m) { return m->a; }");
  const FunctionInfo& info = g.pdg->function("f");
  ASSERT_EQ(info.param_trees.size(), 1u);
  const ParamTree& tree = info.param_trees[0];
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.nodes[0].path, "m");
  EXPECT_EQ(tree.nodes[1].path, "m->a");
  EXPECT_EQ(tree.nodes[2].path, "m->b");
  EXPECT_EQ(tree.children(0), (std::vector<int>{1, 2}));
}

TEST(ParamTree, RecursionIsCutAtRepeatedType)
{
  auto g = graphs_of("struct node { int v; struct node *next; }; int f(struct node *n) { return n->v; }");
  const ParamTree& tree = g.pdg->function("f").param_trees[0];
  ASSERT_EQ(tree.size(), 3u);
  EXPECT_EQ(tree.nodes[2].path, "n->next");
  EXPECT_TRUE(tree.nodes[2].cut);
}

TEST(Pdg, BranchControlsAssignment)
{
  auto g = graphs_of("int f(int c) { int x; x = 0; if (c) x = 1; return x; }");
  const PdgNode* branch = find_instr(g, "f", Opcode::Branch);
  const PdgNode* assign = find_instr(g, "f", Opcode::Assign, 1);
  ASSERT_TRUE(branch && assign);
  EXPECT_TRUE(g.pdg->has_edge(branch->id, assign->id, EdgeKind::ControlDep));
  const PdgNode* first = find_instr(g, "f", Opcode::Assign, 0);
  EXPECT_FALSE(g.pdg->has_edge(branch->id, first->id, EdgeKind::ControlDep));
}

TEST(Pdg, TransitiveAssignmentChain)
{
  auto g = graphs_of("int f(int a, int b) { int x; int y; x = a + b; y = x; return y; }");
  const PdgNode* add = find_instr(g, "f", Opcode::Arith);
  const PdgNode* x = find_instr(g, "f", Opcode::Assign, 0);
  const PdgNode* y = find_instr(g, "f", Opcode::Assign, 1);
  const auto& info = g.pdg->function("f");
  EXPECT_TRUE(g.pdg->has_edge(info.formal_in[0][0], add->id, EdgeKind::DataDep));
  EXPECT_TRUE(g.pdg->has_edge(info.formal_in[1][0], add->id, EdgeKind::DataDep));
  EXPECT_TRUE(g.pdg->has_edge(add->id, x->id, EdgeKind::DataDep));
  EXPECT_TRUE(g.pdg->has_edge(x->id, y->id, EdgeKind::DataDep));
}

TEST(Pdg, CallbackReturnFeedsKernelBranch)
{
  auto g = graphs_of(kCallbackSource);
  const PdgNode* call = find_instr(g, "really_probe", Opcode::IndirectCall);
  ASSERT_TRUE(call);
  const CallNodes* cn = g.pdg->call_nodes("really_probe", call->instr);
  ASSERT_TRUE(cn);
  ASSERT_FALSE(cn->ret.empty());
  const PdgNode* ret = find_instr(g, "my_probe", Opcode::Return);
  EXPECT_TRUE(g.pdg->has_edge(ret->id, cn->ret[0], EdgeKind::DataDep));
  const PdgNode* branch = find_instr(g, "really_probe", Opcode::Branch);
  // return -> actual return -> ret = ... -> compare -> branch
  std::set<int> seen{ret->id};
  std::vector<int> stack{ret->id};
  while (!stack.empty())
  {
    int v = stack.back();
    stack.pop_back();
    for (int e : g.pdg->out_edges(v))
    {
      const PdgEdge& edge = g.pdg->edges()[static_cast<std::size_t>(e)];
      if (edge.kind == EdgeKind::DataDep && seen.insert(edge.dst).second)
        stack.push_back(edge.dst);
    }
  }
  EXPECT_TRUE(seen.count(branch->id));
  EXPECT_TRUE(g.pdg->has_edge(call->id, find_instr(g, "my_probe", Opcode::AddrOf)->id, EdgeKind::Call));
}

TEST(Pdg, ParameterTreesLinkFieldByField)
{
  auto g = graphs_of(R"(
struct S { int a; int b; };
int get(struct S *m) { return m->b; }
int use(struct S *s) { return get(s); }
)");
  const PdgNode* call = find_instr(g, "use", Opcode::Call);
  const CallNodes* cn = g.pdg->call_nodes("use", call->instr);
  const FunctionInfo& info = g.pdg->function("get");
  ASSERT_EQ(cn->actual_in[0].size(), 3u);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_TRUE(g.pdg->has_edge(cn->actual_in[0][k], info.formal_in[0][k], EdgeKind::ParamIn));
  for (std::size_t k = 1; k < 3; ++k)
    EXPECT_TRUE(g.pdg->has_edge(info.formal_out[0][k], cn->actual_out[0][k], EdgeKind::ParamOut));
  // m->b read inside get depends on the formal-in node for field b
  const PdgNode* load = find_instr(g, "get", Opcode::Load);
  EXPECT_TRUE(g.pdg->has_edge(info.formal_in[0][2], load->id, EdgeKind::Alias));
  EXPECT_FALSE(g.pdg->has_edge(info.formal_in[0][1], load->id, EdgeKind::Alias));
}

TEST(Pdg, UnknownCalleeRejected)
{
  Program p = lower(parse(SourceFile{"t.mker", "void helper(int x); void f(void) { helper(1); }", std::nullopt}));
  std::set<std::string> none;
  EXPECT_THROW(build_graphs(std::move(p), &none), UnknownCallee);
  Program q = lower(parse(SourceFile{"t.mker", "void helper(int x); void f(void) { helper(1); }", std::nullopt}));
  std::set<std::string> declared{"helper"};
  EXPECT_NO_THROW(build_graphs(std::move(q), &declared));
}

TEST(Pdg, DefUseMatchesReachingDefinitionsOracle)
{
  for (const char* text : {kLoopSource, kAliasSource, kCallbackSource})
    check_def_use(graphs_of(text));
}

TEST(Pdg, DefUseOracleOnCorpus)
{
  namespace fs = std::filesystem;
  int checked = 0;
  if (!fs::exists(CIV_CORPUS_DIR))
    GTEST_SKIP() << "no corpus";
  std::vector<fs::path> cases;
  for (const auto& entry : fs::directory_iterator(CIV_CORPUS_DIR))
    if (entry.is_directory())
      cases.push_back(entry.path());
  std::sort(cases.begin(), cases.end());
  for (const auto& dir : cases)
  {
    std::vector<SourceFile> files;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".mker")
        paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths)
      files.push_back(read_source_file(p.string()));
    auto g = build_graphs(load_program(files));
    std::size_t instrs = 0;
    for (const auto* fn : g.program->functions())
      instrs += fn->instrs.size();
    if (instrs > 200)
      continue;
    SCOPED_TRACE(dir.string());
    check_def_use(g);
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(Pdg, JsonIsDeterministic)
{
  auto a = graphs_of(kCallbackSource).pdg->to_json().dump();
  auto b = graphs_of(kCallbackSource).pdg->to_json().dump();
  EXPECT_EQ(a, b);
  auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j["pdg_version"], 1);
  EXPECT_FALSE(j["nodes"].empty());
  EXPECT_TRUE(j["edges"][0].contains("kind"));
}
