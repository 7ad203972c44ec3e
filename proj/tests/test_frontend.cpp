#include "civ/frontend/lower.hpp"
#include "civ/frontend/parser.hpp"

#include <gtest/gtest.h>

using namespace civ;
using namespace civ::frontend;

namespace {

SourceFile
src(std::string text, std::string path = "t.mker")
{
  return SourceFile{std::move(path), std::move(text), std::nullopt};
}

std::vector<std::string>
kinds(const std::vector<Token>& tokens)
{
  std::vector<std::string> out;
  for (const auto& t : tokens)
  {
    switch (t.kind)
    {
    case TokenKind::Keyword:
      out.push_back("kw:" + t.text);
      break;
    case TokenKind::Identifier:
      out.push_back("ident:" + t.text);
      break;
    case TokenKind::Punct:
      out.push_back(t.text == ";" ? "semi" : t.text);
      break;
    default:
      out.push_back(t.text);
    }
  }
  return out;
}

std::string
ir_of(const std::string& text)
{
  Program p = lower(parse(src(text)));
  return dump_function(p.modules[0].functions.back());
}

} // namespace

TEST(Lexer, SmallestDeclaration)
{
  EXPECT_EQ(kinds(tokenize(src("int x;"))), (std::vector<std::string>{"kw:int", "ident:x", "semi"}));
}

TEST(Lexer, ForHeaderTokenCount)
{
  auto tokens = tokenize(src("for (i = 0; i < mci->n_layers; i++)"));
  // for ( i = 0 ; i < mci -> n_layers ; i ++ )
  ASSERT_EQ(tokens.size(), 15u);
  EXPECT_EQ(tokens[9].text, "->");
  EXPECT_EQ(tokens[9].pos.column, 20);
}

TEST(Lexer, UnterminatedComment)
{
  try
  {
    tokenize(src("/* unterminated"));
    FAIL() << "expected LexError";
  }
  catch (const LexError& e)
  {
    EXPECT_EQ(e.pos().offset, 0u);
    EXPECT_EQ(e.pos().line, 1);
  }
}

TEST(Lexer, RejectsPreprocessorAndBadCharacters)
{
  EXPECT_THROW(tokenize(src("#include <x.h>\n")), LexError);
  EXPECT_THROW(tokenize(src("int x = 1 @ 2;")), LexError);
  EXPECT_THROW(tokenize(src("char *s = \"abc;\n")), LexError);
  EXPECT_THROW(tokenize(src("int \x80;")), LexError);
}

TEST(Lexer, LiteralsAndPragma)
{
  auto tokens = tokenize(src("x = 0x1F + 010 + '\\n' ; /*@selector(type)*/ // tail\n \"a\\tb\""));
  EXPECT_EQ(tokens[2].value, 31);
  EXPECT_EQ(tokens[4].value, 8);
  EXPECT_EQ(tokens[6].value, 10);
  EXPECT_EQ(tokens[8].kind, TokenKind::SelectorPragma);
  EXPECT_EQ(tokens[8].text, "type");
  EXPECT_EQ(tokens[9].text, "a\tb");
}

TEST(Parser, ForLoopCondition)
{
  auto unit = parse(src(R"(
struct edac_layer { int size; };
struct mem_ctl_info { int n_layers; struct edac_layer layers[4]; };
void edac_mc_handle_error(struct mem_ctl_info *m, int *pos)
{
  int i;
  for (i = 0; i < m->n_layers; i++) {
    if (pos[i] >= m->layers[i].size)
      return;
  }
}
)"));
  const auto& fn = unit.decls.back();
  ASSERT_EQ(fn.kind, DeclKind::Function);
  int loops = 0;
  for (const auto& s : fn.body->items)
  {
    if (s->kind != StmtKind::For)
      continue;
    ++loops;
    ASSERT_TRUE(s->cond);
    EXPECT_EQ(s->cond->text, "<");
    EXPECT_EQ(s->cond->kids[0]->text, "i");
    EXPECT_EQ(s->cond->kids[1]->kind, ExprKind::Member);
    EXPECT_TRUE(s->cond->kids[1]->arrow);
    EXPECT_EQ(s->cond->kids[1]->text, "n_layers");
  }
  EXPECT_EQ(loops, 1);
}

TEST(Parser, SelectorPragmaOnEnclosingAggregate)
{
  auto program = lower(parse(src(R"(
union u { int a; char *p; };
struct obj /*@selector(type)*/ { int type; union u val; };
)")));
  const TypeDecl* u = program.types.record("u");
  ASSERT_TRUE(u);
  EXPECT_EQ(u->kind, TypeDeclKind::Union);
  ASSERT_TRUE(u->selector_field);
  EXPECT_EQ(*u->selector_field, "type");
  EXPECT_EQ(u->selector_owner, "obj");
  EXPECT_EQ(*program.types.record("obj")->selector_field, "type");
}

TEST(Parser, FailFastWithExpectedSet)
{
  try
  {
    parse(src("int f( {"));
    FAIL() << "expected ParseError";
  }
  catch (const ParseError& e)
  {
    EXPECT_EQ(e.pos().column, 8);
    EXPECT_FALSE(e.expected().empty());
  }
  EXPECT_THROW(parse(src("void f(void) { goto out; }")), ParseError);
  EXPECT_THROW(parse(src("void f(int n, ...);")), ParseError);
  EXPECT_THROW(parse(src("typedef int (*cb)(int);")), ParseError);
}

TEST(Parser, RoundTripDeclarators)
{
  const char* text = R"(
struct dev;
typedef unsigned int u32;
struct ops { int (*probe)(struct dev *d, u32 flags); char *name; int *slots[3]; };
enum mode { A, B = 4, C };
extern int counter;
static long table[8];
void *alloc(long size, int flags);
int run(struct ops *o, struct dev *d)
{
  int x = -(-1);
  u32 y = (u32)x;
  x += y << 2;
  if (o->probe && !d) return (*o->probe)(d, 0); else x--;
  while (x > 0) { x = x - 1; if (x == 3) break; continue; }
  switch (x) { case A: x = 1; break; case B: default: x = 2; }
  return x ? x : sizeof(struct ops) + sizeof x;
}
)";
  auto first = parse(src(text));
  std::string printed = print(first);
  auto second = parse(src(printed));
  EXPECT_EQ(dump_structure(first), dump_structure(second)) << printed;
  EXPECT_EQ(print(second), printed);
}

TEST(Lower, FieldIndexFieldCompare)
{
  std::string ir = ir_of(R"(
struct edac_layer { int size; };
struct mem_ctl_info { int n_layers; struct edac_layer layers[4]; };
int f(struct mem_ctl_info *m, int i) { return m->layers[i].size > 0; }
)");
  EXPECT_NE(ir.find("%0 = fieldaddr m, mem_ctl_info.layers"), std::string::npos) << ir;
  EXPECT_NE(ir.find("%1 = index %0, i"), std::string::npos) << ir;
  EXPECT_NE(ir.find("%2 = fieldaddr %1, edac_layer.size"), std::string::npos) << ir;
  EXPECT_NE(ir.find("%3 = load %2 : int"), std::string::npos) << ir;
  EXPECT_NE(ir.find("%4 = cmp gt %3, 0"), std::string::npos) << ir;
}

TEST(Lower, ExpectedIrDump)
{
  std::string ir = ir_of(R"(
int f(int a, int b)
{
  int x;
  int y;
  x = a + b;
  y = x;
  return y;
}
)");
  const char* expected = "function f(a: int, b: int) -> int [kernel]\n"
                         "  local x: int\n"
                         "  local y: int\n"
                         "bb0:\n"
                         "  %0 = add a, b : int  ; 6:7\n"
                         "  x = %0  ; 6:3\n"
                         "  y = x  ; 7:3\n"
                         "  ret y  ; 8:3\n";
  EXPECT_EQ(ir, expected);
}

TEST(Lower, CastChainKeepsBothTypes)
{
  std::string ir = ir_of(R"(
struct bonding { int mode; };
struct bonding *get(long *p) { return (struct bonding *)(void *)p; }
)");
  EXPECT_NE(ir.find("cast p : long* -> void*"), std::string::npos) << ir;
  EXPECT_NE(ir.find("cast %0 : void* -> struct bonding*"), std::string::npos) << ir;
}

TEST(Lower, ShortCircuitBecomesBranches)
{
  Program p = lower(parse(src("int f(int a, int b) { if (a > 0 && b > 0) return 1; return 0; }")));
  const IRFunction& fn = p.modules[0].functions[0];
  int branches = 0;
  for (const auto& ins : fn.instrs)
    if (ins.op == Opcode::Branch && ins.args.size() == 1)
    {
      ++branches;
      EXPECT_EQ(fn.temp_def(ins.args[0].temp)->op, Opcode::Compare);
    }
  EXPECT_EQ(branches, 2);
}

TEST(Lower, EveryBlockHasOneTerminatorAndPositions)
{
  Program p = lower(parse(src(R"(
int g;
int f(int n)
{
  int i;
  int s = 0;
  for (i = 0; i < n; i++) { if (i == 2) continue; if (i == 5) break; s += i; }
  switch (n) { case 1: return 1; case 2: s = 0; default: break; }
  while (s) s--;
  g = s ? 1 : 2;
  return s;
}
)")));
  for (const auto& fn : p.modules[0].functions)
  {
    for (const auto& b : fn.blocks)
    {
      ASSERT_FALSE(b.instrs.empty());
      for (std::size_t i = 0; i + 1 < b.instrs.size(); ++i)
        EXPECT_FALSE(fn.instrs[b.instrs[i]].is_terminator());
      EXPECT_TRUE(fn.instrs[b.instrs.back()].is_terminator());
    }
    for (const auto& ins : fn.instrs)
      EXPECT_GT(ins.range.begin.line, 0);
  }
}

TEST(Lower, TypeErrors)
{
  EXPECT_THROW(lower(parse(src("struct s { int a; }; int f(struct s *p) { return p->b; }"))), TypeError);
  EXPECT_THROW(lower(parse(src("int g(int a); int f(void) { return g(1, 2); }"))), TypeError);
  EXPECT_THROW(lower(parse(src("int f(void) { return h(1); }"))), TypeError);
  EXPECT_THROW(lower(parse(src("struct s { int a; int a; };"))), TypeError);
  EXPECT_THROW(lower(parse(src("struct s { struct s inner; };"))), TypeError);
  EXPECT_THROW(lower(parse(src("struct s /*@selector(p)*/ { char *p; };"))), TypeError);
  EXPECT_THROW(lower(parse(src("int f(int *p) { long x; x = p; return 0; }"))), TypeError);
}

TEST(Lower, WraparoundAndDivisionWarning)
{
  Program p = lower(parse(src("char f(void) { char c = 127 + 1; return 1 / 0; }")));
  std::string ir = dump_function(p.modules[0].functions[0]);
  EXPECT_NE(ir.find("c = -128"), std::string::npos) << ir;
  ASSERT_EQ(p.warnings.size(), 1u);
  EXPECT_EQ(p.warnings[0].message, "division by constant zero");
}

TEST(Lower, Deterministic)
{
  const char* text = "int f(int a) { int b = a * 3; while (b > 0) b = b - a; return b; }";
  EXPECT_EQ(dump_ir(lower(parse(src(text)))), dump_ir(lower(parse(src(text)))));
}
