#include "civ/frontend/parser.hpp"

#include <set>
#include <sstream>

namespace civ::frontend {

const std::vector<Param>&
function_params(const TypeSyntax& type)
{
  static const std::vector<Param> kNone;
  if (type.ops.empty() || type.ops.front().kind != DeclOp::Kind::Function)
    return kNone;
  return type.ops.front().params;
}

namespace {

struct Declarator
{
  std::string name;
  SourcePos pos;
  std::vector<DeclOp> ops;
};

class Parser
{
public:
  explicit Parser(const SourceFile& file) : file_(file), tokens_(tokenize(file)) {}

  TranslationUnit
  run()
  {
    TranslationUnit unit;
    unit.path = file_.path;
    while (!at_end())
      parse_top(unit);
    return unit;
  }

private:
  // Token access.

  bool at_end() const { return index_ >= tokens_.size(); }

  const Token*
  peek_tok(std::size_t ahead = 0) const
  {
    return index_ + ahead < tokens_.size() ? &tokens_[index_ + ahead] : nullptr;
  }

  SourcePos
  here() const
  {
    if (const Token* t = peek_tok())
      return t->pos;
    SourcePos end{file_.path, 1, 1, file_.text.size()};
    if (!tokens_.empty())
    {
      end = tokens_.back().pos;
      end.column += static_cast<int>(tokens_.back().text.size());
    }
    return end;
  }

  SourcePos last_pos() const { return index_ > 0 ? tokens_[index_ - 1].pos : here(); }

  bool
  is(const char* text, std::size_t ahead = 0) const
  {
    const Token* t = peek_tok(ahead);
    return t && (t->kind == TokenKind::Punct || t->kind == TokenKind::Keyword) && t->text == text;
  }

  bool
  is_ident(std::size_t ahead = 0) const
  {
    const Token* t = peek_tok(ahead);
    return t && t->kind == TokenKind::Identifier;
  }

  bool
  accept(const char* text)
  {
    if (!is(text))
      return false;
    ++index_;
    return true;
  }

  [[noreturn]] void
  fail(const std::string& message, std::vector<std::string> expected = {}) const
  {
    std::string found = at_end() ? "end of file" : "'" + peek_tok()->text + "'";
    throw ParseError(message + ", found " + found, here(), std::move(expected));
  }

  const Token&
  expect(const char* text)
  {
    if (!is(text))
      fail(std::string("expected '") + text + "'", {text});
    return tokens_[index_++];
  }

  const Token&
  expect_ident()
  {
    if (!is_ident())
      fail("expected identifier", {"identifier"});
    return tokens_[index_++];
  }

  // Types.

  bool
  starts_type(std::size_t ahead = 0) const
  {
    static const std::set<std::string> kTypeWords = {"void",   "char",  "short", "int",    "long",     "signed",
                                                       "unsigned", "struct", "union", "enum", "const", "volatile",
                                                       "static", "extern", "inline"};
    const Token* t = peek_tok(ahead);
    if (!t)
      return false;
    if (t->kind == TokenKind::Keyword)
      return kTypeWords.count(t->text) > 0;
    return t->kind == TokenKind::Identifier && typedefs_.count(t->text) > 0;
  }

  struct Specifiers
  {
    std::vector<std::string> words;
    bool is_static = false;
    bool is_extern = false;
    SourcePos pos;
  };

  Specifiers
  parse_specifiers()
  {
    Specifiers spec;
    spec.pos = here();
    bool base_done = false; // a tag or typedef name was seen
    while (!at_end())
    {
      const Token& t = *peek_tok();
      if (t.kind == TokenKind::Keyword)
      {
        if (t.text == "const" || t.text == "volatile" || t.text == "inline")
        {
          ++index_;
          continue;
        }
        if (t.text == "static" || t.text == "extern")
        {
          (t.text == "static" ? spec.is_static : spec.is_extern) = true;
          ++index_;
          continue;
        }
        if (t.text == "struct" || t.text == "union" || t.text == "enum")
        {
          if (base_done || !spec.words.empty())
            fail("unexpected tag in type specifier");
          ++index_;
          spec.words.push_back(t.text);
          spec.words.push_back(expect_ident().text);
          base_done = true;
          continue;
        }
        if (t.text == "void" || t.text == "char" || t.text == "short" || t.text == "int" || t.text == "long" ||
            t.text == "signed" || t.text == "unsigned")
        {
          if (base_done)
            fail("conflicting type specifiers");
          spec.words.push_back(t.text);
          ++index_;
          continue;
        }
        break;
      }
      if (t.kind == TokenKind::Identifier && typedefs_.count(t.text) && spec.words.empty())
      {
        spec.words.push_back(t.text);
        ++index_;
        base_done = true;
        continue;
      }
      break;
    }
    if (spec.words.empty())
      fail("expected type specifier", {"type"});
    return spec;
  }

  void
  skip_qualifiers()
  {
    while (is("const") || is("volatile"))
      ++index_;
  }

  Declarator
  parse_declarator(bool allow_abstract)
  {
    Declarator d;
    d.pos = here();
    int stars = 0;
    while (accept("*"))
    {
      ++stars;
      skip_qualifiers();
    }
    std::vector<DeclOp> inner;
    if (is("(") && is("*", 1))
    {
      ++index_;
      Declarator nested = parse_declarator(allow_abstract);
      expect(")");
      inner = std::move(nested.ops);
      d.name = nested.name;
      d.pos = nested.pos;
    }
    else if (is_ident())
    {
      d.pos = here();
      d.name = tokens_[index_++].text;
    }
    else if (!allow_abstract)
    {
      fail("expected declarator name", {"identifier"});
    }
    std::vector<DeclOp> suffixes;
    while (true)
    {
      if (accept("["))
      {
        DeclOp op;
        op.kind = DeclOp::Kind::Array;
        if (!is("]"))
          op.size = parse_conditional();
        expect("]");
        suffixes.push_back(std::move(op));
      }
      else if (accept("("))
      {
        DeclOp op;
        op.kind = DeclOp::Kind::Function;
        op.params = parse_params();
        suffixes.push_back(std::move(op));
      }
      else
      {
        break;
      }
    }
    d.ops = std::move(inner);
    for (auto& op : suffixes)
      d.ops.push_back(std::move(op));
    for (int i = 0; i < stars; ++i)
      d.ops.push_back(DeclOp{});
    return d;
  }

  std::vector<Param>
  parse_params()
  {
    std::vector<Param> params;
    if (accept(")"))
      return params;
    if (is("void") && is(")", 1))
    {
      index_ += 2;
      return params;
    }
    while (true)
    {
      if (is("..."))
        fail("variadic functions are not supported");
      Param p;
      p.pos = here();
      Specifiers spec = parse_specifiers();
      Declarator d = parse_declarator(true);
      p.type.specifiers = std::move(spec.words);
      p.type.ops = std::move(d.ops);
      p.type.pos = spec.pos;
      p.name = d.name;
      if (!d.name.empty())
        p.pos = d.pos;
      params.push_back(std::move(p));
      if (accept(")"))
        break;
      expect(",");
    }
    return params;
  }

  TypeSyntax
  parse_type_name()
  {
    Specifiers spec = parse_specifiers();
    Declarator d = parse_declarator(true);
    if (!d.name.empty())
      throw ParseError("unexpected name in type", d.pos);
    return TypeSyntax{std::move(spec.words), std::move(d.ops), spec.pos};
  }

  // Top level.

  void
  parse_top(TranslationUnit& unit)
  {
    std::optional<std::string> selector;
    if (peek_tok()->kind == TokenKind::SelectorPragma)
      selector = tokens_[index_++].text;
    SourcePos start = here();

    if (accept("typedef"))
    {
      Specifiers spec = parse_specifiers();
      Declarator d = parse_declarator(false);
      if (!d.ops.empty() && (d.ops.front().kind == DeclOp::Kind::Function))
        throw ParseError("typedefs of function types are not supported", d.pos);
      if (d.ops.size() >= 2 && d.ops[0].kind == DeclOp::Kind::Pointer && d.ops[1].kind == DeclOp::Kind::Function)
        throw ParseError("typedefs of function pointer types are not supported", d.pos);
      expect(";");
      TopDecl decl;
      decl.kind = DeclKind::Typedef;
      decl.range = {start, last_pos()};
      decl.name = d.name;
      decl.type = TypeSyntax{std::move(spec.words), std::move(d.ops), spec.pos};
      typedefs_.insert(decl.name);
      unit.decls.push_back(std::move(decl));
      return;
    }

    if ((is("struct") || is("union")) && is_ident(1) &&
        (is("{", 2) || is(";", 2) || (peek_tok(2) && peek_tok(2)->kind == TokenKind::SelectorPragma)))
    {
      unit.decls.push_back(parse_record(start, selector));
      return;
    }
    if (is("enum") && (is("{", 1) || (is_ident(1) && is("{", 2))))
    {
      unit.decls.push_back(parse_enum(start));
      return;
    }
    if (selector)
      throw ParseError("selector pragma must precede a struct or union definition", start);

    Specifiers spec = parse_specifiers();
    while (true)
    {
      Declarator d = parse_declarator(false);
      TopDecl decl;
      decl.name = d.name;
      decl.is_extern = spec.is_extern;
      decl.is_static = spec.is_static;
      decl.type = TypeSyntax{spec.words, std::move(d.ops), spec.pos};
      bool is_function = !decl.type.ops.empty() && decl.type.ops.front().kind == DeclOp::Kind::Function;
      if (is_function)
      {
        decl.kind = DeclKind::Function;
        if (is("{"))
        {
          decl.body = parse_compound();
          decl.range = {start, last_pos()};
          unit.decls.push_back(std::move(decl));
          return;
        }
      }
      else
      {
        decl.kind = DeclKind::Variable;
        if (accept("="))
          decl.init = parse_assignment();
      }
      decl.range = {start, last_pos()};
      unit.decls.push_back(std::move(decl));
      if (accept(";"))
        return;
      expect(",");
    }
  }

  TopDecl
  parse_record(const SourcePos& start, std::optional<std::string> selector)
  {
    TopDecl decl;
    decl.kind = DeclKind::Record;
    decl.is_union = tokens_[index_++].text == "union";
    decl.name = expect_ident().text;
    if (peek_tok() && peek_tok()->kind == TokenKind::SelectorPragma)
    {
      if (selector)
        throw ParseError("duplicate selector pragma", here());
      selector = tokens_[index_++].text;
    }
    decl.selector = selector;
    if (accept(";"))
    {
      if (selector)
        throw ParseError("selector pragma on a forward declaration", start);
      decl.is_forward = true;
      decl.range = {start, last_pos()};
      return decl;
    }
    expect("{");
    while (!accept("}"))
    {
      if (at_end())
        fail("unterminated struct body", {"}"});
      Specifiers spec = parse_specifiers();
      if (spec.is_extern || spec.is_static)
        throw ParseError("storage class on a field", spec.pos);
      while (true)
      {
        Declarator d = parse_declarator(false);
        decl.fields.push_back(FieldDecl{TypeSyntax{spec.words, std::move(d.ops), spec.pos}, d.name, d.pos});
        if (accept(";"))
          break;
        expect(",");
      }
    }
    expect(";");
    decl.range = {start, last_pos()};
    return decl;
  }

  TopDecl
  parse_enum(const SourcePos& start)
  {
    TopDecl decl;
    decl.kind = DeclKind::Enum;
    expect("enum");
    if (is_ident())
      decl.name = tokens_[index_++].text;
    expect("{");
    while (!accept("}"))
    {
      Enumerator e;
      e.pos = here();
      e.name = expect_ident().text;
      if (accept("="))
        e.value = parse_conditional();
      decl.enumerators.push_back(std::move(e));
      if (accept("}"))
        break;
      expect(",");
    }
    expect(";");
    decl.range = {start, last_pos()};
    return decl;
  }

  // Statements.

  StmtPtr
  make_stmt(StmtKind kind, const SourcePos& start)
  {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->range.begin = start;
    return s;
  }

  StmtPtr
  finish(StmtPtr s)
  {
    s->range.end = last_pos();
    return s;
  }

  StmtPtr
  parse_compound()
  {
    auto block = make_stmt(StmtKind::Compound, here());
    expect("{");
    while (!accept("}"))
    {
      if (at_end())
        fail("unterminated block", {"}"});
      parse_block_item(block->items);
    }
    return finish(std::move(block));
  }

  void
  parse_block_item(std::vector<StmtPtr>& out)
  {
    if (starts_type())
    {
      parse_local_decl(out);
      expect(";");
      return;
    }
    out.push_back(parse_stmt());
  }

  void
  parse_local_decl(std::vector<StmtPtr>& out)
  {
    SourcePos start = here();
    Specifiers spec = parse_specifiers();
    if (spec.is_extern)
      throw ParseError("extern declarations inside functions are not supported", start);
    while (true)
    {
      Declarator d = parse_declarator(false);
      auto s = make_stmt(StmtKind::Decl, d.pos);
      s->name = d.name;
      s->is_static = spec.is_static;
      s->decl_type = TypeSyntax{spec.words, std::move(d.ops), spec.pos};
      if (accept("="))
        s->expr = parse_assignment();
      out.push_back(finish(std::move(s)));
      if (!accept(","))
        break;
    }
  }

  StmtPtr
  parse_stmt()
  {
    SourcePos start = here();
    if (at_end())
      fail("expected statement");
    if (is("{"))
      return parse_compound();
    if (is("do") || is("goto"))
      fail("'" + peek_tok()->text + "' is not supported");
    if (accept(";"))
      return finish(make_stmt(StmtKind::Empty, start));
    if (accept("if"))
    {
      auto s = make_stmt(StmtKind::If, start);
      expect("(");
      s->cond = parse_expr();
      expect(")");
      s->then_branch = parse_stmt();
      if (accept("else"))
        s->else_branch = parse_stmt();
      return finish(std::move(s));
    }
    if (accept("while"))
    {
      auto s = make_stmt(StmtKind::While, start);
      expect("(");
      s->cond = parse_expr();
      expect(")");
      s->body = parse_stmt();
      return finish(std::move(s));
    }
    if (accept("for"))
    {
      auto s = make_stmt(StmtKind::For, start);
      expect("(");
      if (starts_type())
      {
        std::vector<StmtPtr> decls;
        parse_local_decl(decls);
        if (decls.size() != 1)
          throw ParseError("only one declaration is allowed in a for initializer", start);
        s->init = std::move(decls.front());
        expect(";");
      }
      else if (!accept(";"))
      {
        auto init = make_stmt(StmtKind::Expr, here());
        init->expr = parse_expr();
        s->init = finish(std::move(init));
        expect(";");
      }
      if (!is(";"))
        s->cond = parse_expr();
      expect(";");
      if (!is(")"))
        s->step = parse_expr();
      expect(")");
      s->body = parse_stmt();
      return finish(std::move(s));
    }
    if (accept("switch"))
    {
      auto s = make_stmt(StmtKind::Switch, start);
      expect("(");
      s->cond = parse_expr();
      expect(")");
      s->body = parse_stmt();
      return finish(std::move(s));
    }
    if (accept("case"))
    {
      auto s = make_stmt(StmtKind::Case, start);
      s->expr = parse_conditional();
      expect(":");
      return finish(std::move(s));
    }
    if (accept("default"))
    {
      auto s = make_stmt(StmtKind::Default, start);
      expect(":");
      return finish(std::move(s));
    }
    if (accept("break"))
    {
      expect(";");
      return finish(make_stmt(StmtKind::Break, start));
    }
    if (accept("continue"))
    {
      expect(";");
      return finish(make_stmt(StmtKind::Continue, start));
    }
    if (accept("return"))
    {
      auto s = make_stmt(StmtKind::Return, start);
      if (!is(";"))
        s->expr = parse_expr();
      expect(";");
      return finish(std::move(s));
    }
    auto s = make_stmt(StmtKind::Expr, start);
    s->expr = parse_expr();
    expect(";");
    return finish(std::move(s));
  }

  // Expressions.

  ExprPtr
  make_expr(ExprKind kind, const SourcePos& start, std::string text = {})
  {
    auto e = std::make_unique<Expr>();
    e->kind = kind;
    e->range.begin = start;
    e->range.end = last_pos();
    e->text = std::move(text);
    return e;
  }

  ExprPtr
  binary(ExprKind kind, std::string op, ExprPtr lhs, ExprPtr rhs)
  {
    auto e = make_expr(kind, lhs->range.begin, std::move(op));
    e->kids.push_back(std::move(lhs));
    e->kids.push_back(std::move(rhs));
    return e;
  }

  ExprPtr
  parse_expr()
  {
    ExprPtr e = parse_assignment();
    while (is(","))
      fail("the comma operator is not supported");
    return e;
  }

  ExprPtr
  parse_assignment()
  {
    ExprPtr lhs = parse_conditional();
    static const char* kOps[] = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="};
    for (const char* op : kOps)
    {
      if (accept(op))
      {
        ExprPtr rhs = parse_assignment();
        return binary(ExprKind::Assign, op, std::move(lhs), std::move(rhs));
      }
    }
    return lhs;
  }

  ExprPtr
  parse_conditional()
  {
    ExprPtr cond = parse_binary(0);
    if (!accept("?"))
      return cond;
    ExprPtr then_e = parse_expr();
    expect(":");
    ExprPtr else_e = parse_conditional();
    auto e = make_expr(ExprKind::Cond, cond->range.begin, "?:");
    e->kids.push_back(std::move(cond));
    e->kids.push_back(std::move(then_e));
    e->kids.push_back(std::move(else_e));
    return e;
  }

  static int
  precedence(const std::string& op)
  {
    static const std::vector<std::vector<std::string>> kLevels = {
      {"||"}, {"&&"}, {"|"}, {"^"}, {"&"}, {"==", "!="}, {"<", ">", "<=", ">="}, {"<<", ">>"}, {"+", "-"}, {"*", "/", "%"},
    };
    for (std::size_t i = 0; i < kLevels.size(); ++i)
      for (const auto& candidate : kLevels[i])
        if (candidate == op)
          return static_cast<int>(i);
    return -1;
  }

  ExprPtr
  parse_binary(int min_level)
  {
    ExprPtr lhs = parse_unary();
    while (true)
    {
      const Token* t = peek_tok();
      if (!t || t->kind != TokenKind::Punct)
        return lhs;
      int level = precedence(t->text);
      if (level < 0 || level < min_level)
        return lhs;
      std::string op = t->text;
      ++index_;
      ExprPtr rhs = parse_binary(level + 1);
      lhs = binary(ExprKind::Binary, op, std::move(lhs), std::move(rhs));
    }
  }

  ExprPtr
  parse_unary()
  {
    SourcePos start = here();
    static const char* kPrefix[] = {"-", "+", "!", "~", "*", "&", "++", "--"};
    for (const char* op : kPrefix)
    {
      if (accept(op))
      {
        ExprPtr operand = parse_unary();
        auto e = make_expr(ExprKind::Unary, start, op);
        e->kids.push_back(std::move(operand));
        return e;
      }
    }
    if (accept("sizeof"))
    {
      if (is("(") && starts_type(1))
      {
        ++index_;
        TypeSyntax type = parse_type_name();
        expect(")");
        auto e = make_expr(ExprKind::SizeofType, start, "sizeof");
        e->type = std::make_unique<TypeSyntax>(std::move(type));
        return e;
      }
      ExprPtr operand = parse_unary();
      auto e = make_expr(ExprKind::SizeofExpr, start, "sizeof");
      e->kids.push_back(std::move(operand));
      return e;
    }
    if (is("(") && starts_type(1))
    {
      ++index_;
      TypeSyntax type = parse_type_name();
      expect(")");
      ExprPtr operand = parse_unary();
      auto e = make_expr(ExprKind::Cast, start, "cast");
      e->type = std::make_unique<TypeSyntax>(std::move(type));
      e->kids.push_back(std::move(operand));
      return e;
    }
    return parse_postfix();
  }

  ExprPtr
  parse_postfix()
  {
    ExprPtr e = parse_primary();
    while (true)
    {
      if (accept("("))
      {
        auto call = make_expr(ExprKind::Call, e->range.begin, "call");
        call->kids.push_back(std::move(e));
        if (!accept(")"))
        {
          while (true)
          {
            call->kids.push_back(parse_assignment());
            if (accept(")"))
              break;
            expect(",");
          }
        }
        call->range.end = last_pos();
        e = std::move(call);
      }
      else if (accept("["))
      {
        ExprPtr index = parse_expr();
        expect("]");
        e = binary(ExprKind::Index, "[]", std::move(e), std::move(index));
      }
      else if (is(".") || is("->"))
      {
        bool arrow = tokens_[index_++].text == "->";
        std::string field = expect_ident().text;
        auto member = make_expr(ExprKind::Member, e->range.begin, field);
        member->arrow = arrow;
        member->kids.push_back(std::move(e));
        e = std::move(member);
      }
      else if (is("++") || is("--"))
      {
        std::string op = tokens_[index_++].text;
        auto post = make_expr(ExprKind::Postfix, e->range.begin, op);
        post->kids.push_back(std::move(e));
        e = std::move(post);
      }
      else
      {
        return e;
      }
    }
  }

  ExprPtr
  parse_primary()
  {
    SourcePos start = here();
    const Token* t = peek_tok();
    if (!t)
      fail("expected expression", {"expression"});
    switch (t->kind)
    {
    case TokenKind::IntLiteral:
    case TokenKind::CharLiteral:
    {
      ++index_;
      auto e = make_expr(t->kind == TokenKind::IntLiteral ? ExprKind::IntLit : ExprKind::CharLit, start, t->text);
      e->value = t->value;
      return e;
    }
    case TokenKind::StringLiteral:
    {
      std::string value;
      while (peek_tok() && peek_tok()->kind == TokenKind::StringLiteral)
        value += tokens_[index_++].text;
      return make_expr(ExprKind::StrLit, start, value);
    }
    case TokenKind::Identifier:
      ++index_;
      return make_expr(ExprKind::Ident, start, t->text);
    case TokenKind::Punct:
      if (accept("("))
      {
        ExprPtr inner = parse_expr();
        expect(")");
        return inner;
      }
      break;
    default:
      break;
    }
    fail("expected expression", {"expression"});
  }

  const SourceFile& file_;
  std::vector<Token> tokens_;
  std::size_t index_ = 0;
  std::set<std::string> typedefs_;
};

// Printing.

std::string print_expr(const Expr& e, bool top = false);

std::string
escape_string(const std::string& value)
{
  std::string out = "\"";
  for (char c : value)
  {
    switch (c)
    {
    case '\n':
      out += "\\n";
      break;
    case '\t':
      out += "\\t";
      break;
    case '\r':
      out += "\\r";
      break;
    case '\0':
      out += "\\0";
      break;
    case '\\':
      out += "\\\\";
      break;
    case '"':
      out += "\\\"";
      break;
    default:
      if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
      {
        char buf[8];
        std::snprintf(buf, sizeof buf, "\\x%02x", static_cast<unsigned char>(c));
        out += buf;
      }
      else
      {
        out += c;
      }
    }
  }
  return out + "\"";
}

std::string print_params(const std::vector<Param>& params);

std::string
print_declarator(const std::string& name, const std::vector<DeclOp>& ops)
{
  std::string s = name;
  for (std::size_t i = 0; i < ops.size(); ++i)
  {
    const DeclOp& op = ops[i];
    bool after_pointer = i > 0 && ops[i - 1].kind == DeclOp::Kind::Pointer;
    switch (op.kind)
    {
    case DeclOp::Kind::Pointer:
      s = "*" + s;
      break;
    case DeclOp::Kind::Array:
      if (after_pointer)
        s = "(" + s + ")";
      s += "[" + (op.size ? print_expr(*op.size, true) : std::string()) + "]";
      break;
    case DeclOp::Kind::Function:
      if (after_pointer)
        s = "(" + s + ")";
      s += "(" + print_params(op.params) + ")";
      break;
    }
  }
  return s;
}

std::string
join_words(const std::vector<std::string>& words)
{
  std::string out;
  for (const auto& w : words)
    out += (out.empty() ? "" : " ") + w;
  return out;
}

std::string
print_typed(const TypeSyntax& type, const std::string& name)
{
  std::string decl = print_declarator(name, type.ops);
  return join_words(type.specifiers) + (decl.empty() ? "" : " " + decl);
}

std::string
print_params(const std::vector<Param>& params)
{
  if (params.empty())
    return "void";
  std::string out;
  for (std::size_t i = 0; i < params.size(); ++i)
    out += (i ? ", " : "") + print_typed(params[i].type, params[i].name);
  return out;
}

std::string
print_expr(const Expr& e, bool top)
{
  auto wrap = [top](const std::string& s) { return top ? s : "(" + s + ")"; };
  switch (e.kind)
  {
  case ExprKind::IntLit:
  case ExprKind::CharLit:
    return e.text;
  case ExprKind::StrLit:
    return escape_string(e.text);
  case ExprKind::Ident:
    return e.text;
  case ExprKind::Unary:
    return wrap(e.text + print_expr(*e.kids[0]));
  case ExprKind::Postfix:
    return wrap(print_expr(*e.kids[0]) + e.text);
  case ExprKind::Binary:
  case ExprKind::Assign:
    return wrap(print_expr(*e.kids[0]) + " " + e.text + " " + print_expr(*e.kids[1]));
  case ExprKind::Cond:
    return wrap(print_expr(*e.kids[0]) + " ? " + print_expr(*e.kids[1]) + " : " + print_expr(*e.kids[2]));
  case ExprKind::Call:
  {
    std::string s = print_expr(*e.kids[0]) + "(";
    for (std::size_t i = 1; i < e.kids.size(); ++i)
      s += (i > 1 ? ", " : "") + print_expr(*e.kids[i], true);
    return s + ")";
  }
  case ExprKind::Index:
    return print_expr(*e.kids[0]) + "[" + print_expr(*e.kids[1], true) + "]";
  case ExprKind::Member:
    return print_expr(*e.kids[0]) + (e.arrow ? "->" : ".") + e.text;
  case ExprKind::Cast:
    return wrap("(" + print_typed(*e.type, "") + ")" + print_expr(*e.kids[0]));
  case ExprKind::SizeofType:
    return "sizeof(" + print_typed(*e.type, "") + ")";
  case ExprKind::SizeofExpr:
    return wrap("sizeof " + print_expr(*e.kids[0]));
  }
  return {};
}

void
print_stmt(std::ostream& out, const Stmt& s, int depth)
{
  std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  switch (s.kind)
  {
  case StmtKind::Compound:
    out << pad << "{\n";
    for (const auto& item : s.items)
      print_stmt(out, *item, depth + 1);
    out << pad << "}\n";
    return;
  case StmtKind::Decl:
    out << pad << (s.is_static ? "static " : "") << print_typed(*s.decl_type, s.name);
    if (s.expr)
      out << " = " << print_expr(*s.expr, true);
    out << ";\n";
    return;
  case StmtKind::Expr:
    out << pad << print_expr(*s.expr, true) << ";\n";
    return;
  case StmtKind::If:
    out << pad << "if (" << print_expr(*s.cond, true) << ")\n";
    print_stmt(out, *s.then_branch, depth + 1);
    if (s.else_branch)
    {
      out << pad << "else\n";
      print_stmt(out, *s.else_branch, depth + 1);
    }
    return;
  case StmtKind::While:
    out << pad << "while (" << print_expr(*s.cond, true) << ")\n";
    print_stmt(out, *s.body, depth + 1);
    return;
  case StmtKind::For:
  {
    out << pad << "for (";
    if (s.init)
    {
      if (s.init->kind == StmtKind::Decl)
      {
        out << print_typed(*s.init->decl_type, s.init->name);
        if (s.init->expr)
          out << " = " << print_expr(*s.init->expr, true);
      }
      else
      {
        out << print_expr(*s.init->expr, true);
      }
    }
    out << "; " << (s.cond ? print_expr(*s.cond, true) : "") << "; " << (s.step ? print_expr(*s.step, true) : "") << ")\n";
    print_stmt(out, *s.body, depth + 1);
    return;
  }
  case StmtKind::Switch:
    out << pad << "switch (" << print_expr(*s.cond, true) << ")\n";
    print_stmt(out, *s.body, depth + 1);
    return;
  case StmtKind::Case:
    out << pad << "case " << print_expr(*s.expr, true) << ":\n";
    return;
  case StmtKind::Default:
    out << pad << "default:\n";
    return;
  case StmtKind::Break:
    out << pad << "break;\n";
    return;
  case StmtKind::Continue:
    out << pad << "continue;\n";
    return;
  case StmtKind::Return:
    out << pad << "return" << (s.expr ? " " + print_expr(*s.expr, true) : "") << ";\n";
    return;
  case StmtKind::Empty:
    out << pad << ";\n";
    return;
  }
}

// Structural dump.

void dump_expr(std::ostream& out, const Expr& e);

void
dump_type(std::ostream& out, const TypeSyntax& t)
{
  out << "(type [" << join_words(t.specifiers) << "]";
  for (const auto& op : t.ops)
  {
    switch (op.kind)
    {
    case DeclOp::Kind::Pointer:
      out << " ptr";
      break;
    case DeclOp::Kind::Array:
      out << " (arr ";
      if (op.size)
        dump_expr(out, *op.size);
      out << ")";
      break;
    case DeclOp::Kind::Function:
      out << " (fn";
      for (const auto& p : op.params)
      {
        out << " (" << p.name << " ";
        dump_type(out, p.type);
        out << ")";
      }
      out << ")";
      break;
    }
  }
  out << ")";
}

void
dump_expr(std::ostream& out, const Expr& e)
{
  out << "(" << static_cast<int>(e.kind) << " " << escape_string(e.text) << " " << e.value << (e.arrow ? " ->" : "");
  if (e.type)
  {
    out << " ";
    dump_type(out, *e.type);
  }
  for (const auto& k : e.kids)
  {
    out << " ";
    dump_expr(out, *k);
  }
  out << ")";
}

void
dump_stmt(std::ostream& out, const Stmt* s)
{
  if (!s)
  {
    out << "_";
    return;
  }
  out << "(s" << static_cast<int>(s->kind) << " " << s->name << (s->is_static ? " static" : "");
  if (s->decl_type)
  {
    out << " ";
    dump_type(out, *s->decl_type);
  }
  for (const Expr* e : {s->cond.get(), s->step.get(), s->expr.get()})
  {
    out << " ";
    if (e)
      dump_expr(out, *e);
    else
      out << "_";
  }
  for (const Stmt* k : {s->init.get(), s->then_branch.get(), s->else_branch.get(), s->body.get()})
  {
    out << " ";
    dump_stmt(out, k);
  }
  for (const auto& item : s->items)
  {
    out << " ";
    dump_stmt(out, item.get());
  }
  out << ")";
}

} // namespace

TranslationUnit
parse(const SourceFile& file)
{
  return Parser(file).run();
}

std::string
print(const TranslationUnit& unit)
{
  std::ostringstream out;
  for (const auto& d : unit.decls)
  {
    switch (d.kind)
    {
    case DeclKind::Record:
      out << (d.is_union ? "union " : "struct ") << d.name;
      if (d.selector)
        out << " /*@selector(" << *d.selector << ")*/";
      if (d.is_forward)
      {
        out << ";\n";
        break;
      }
      out << "\n{\n";
      for (const auto& f : d.fields)
        out << "  " << print_typed(f.type, f.name) << ";\n";
      out << "};\n";
      break;
    case DeclKind::Enum:
      out << "enum " << d.name << "\n{\n";
      for (const auto& e : d.enumerators)
        out << "  " << e.name << (e.value ? " = " + print_expr(*e.value, true) : "") << ",\n";
      out << "};\n";
      break;
    case DeclKind::Typedef:
      out << "typedef " << print_typed(d.type, d.name) << ";\n";
      break;
    case DeclKind::Variable:
      out << (d.is_extern ? "extern " : "") << (d.is_static ? "static " : "") << print_typed(d.type, d.name);
      if (d.init)
        out << " = " << print_expr(*d.init, true);
      out << ";\n";
      break;
    case DeclKind::Function:
      out << (d.is_extern ? "extern " : "") << (d.is_static ? "static " : "") << print_typed(d.type, d.name);
      if (d.body)
      {
        out << "\n";
        print_stmt(out, *d.body, 0);
      }
      else
      {
        out << ";\n";
      }
      break;
    }
    out << "\n";
  }
  return out.str();
}

std::string
dump_structure(const TranslationUnit& unit)
{
  std::ostringstream out;
  for (const auto& d : unit.decls)
  {
    out << "(decl " << static_cast<int>(d.kind) << " " << d.name << (d.is_union ? " union" : "")
        << (d.is_forward ? " fwd" : "") << (d.is_extern ? " extern" : "") << (d.is_static ? " static" : "")
        << " sel=" << d.selector.value_or("") << " ";
    dump_type(out, d.type);
    for (const auto& f : d.fields)
    {
      out << " (field " << f.name << " ";
      dump_type(out, f.type);
      out << ")";
    }
    for (const auto& e : d.enumerators)
    {
      out << " (enum " << e.name << " ";
      if (e.value)
        dump_expr(out, *e.value);
      out << ")";
    }
    if (d.init)
    {
      out << " ";
      dump_expr(out, *d.init);
    }
    out << " ";
    dump_stmt(out, d.body.get());
    out << ")\n";
  }
  return out.str();
}

} // namespace civ::frontend
