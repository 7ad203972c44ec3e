#include "civ/frontend/lexer.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string_view>

namespace civ::frontend {

std::string
to_string(Compartment c)
{
  switch (c)
  {
  case Compartment::Kernel:
    return "kernel";
  case Compartment::Driver:
    return "driver";
  case Compartment::External:
    return "external";
  }
  return "external";
}

SourceFile
read_source_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read '" + path + "'", SourcePos{path, 0, 0, 0});
  std::ostringstream text;
  text << in.rdbuf();
  return SourceFile{path, text.str(), std::nullopt};
}

namespace {

constexpr std::array kKeywords = {
  "void",   "char",   "short",  "int",    "long",     "signed",  "unsigned", "struct",
  "union",  "enum",   "typedef", "if",    "else",     "while",   "for",      "switch",
  "case",   "default", "break", "continue", "return", "sizeof",  "const",    "volatile",
  "static", "extern", "inline", "do",     "goto",
};

// Longest first so that maximal munch works with a linear scan.
constexpr std::array<std::string_view, 46> kPuncts = {
  "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
  "*=",  "/=",  "%=",  "&=", "|=", "^=", "+",  "-",  "*",  "/",  "%",  "<",  ">",  "=",  "!",  "~",
  "&",   "|",   "^",   "?",  ":",  ";",  ",",  ".",  "(",  ")",  "[",  "]",  "{",  "}",
};

class Lexer
{
public:
  explicit Lexer(const SourceFile& file) : file_(file), text_(file.text) {}

  std::vector<Token>
  run()
  {
    std::vector<Token> tokens;
    while (true)
    {
      skip_space();
      if (at_end())
        break;
      char c = peek();
      SourcePos start = pos();
      if (c == '/' && peek(1) == '*')
      {
        if (auto pragma = block_comment(start))
          tokens.push_back(*pragma);
        continue;
      }
      if (c == '/' && peek(1) == '/')
      {
        while (!at_end() && peek() != '\n')
          advance();
        continue;
      }
      if (c == '#')
        throw LexError("preprocessor directives are not permitted", start);
      if (is_ident_start(c))
      {
        tokens.push_back(identifier(start));
        continue;
      }
      if (is_digit(c))
      {
        tokens.push_back(number(start));
        continue;
      }
      if (c == '\'')
      {
        tokens.push_back(char_literal(start));
        continue;
      }
      if (c == '"')
      {
        tokens.push_back(string_literal(start));
        continue;
      }
      tokens.push_back(punct(start));
    }
    return tokens;
  }

private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_ident(char c) { return is_ident_start(c) || is_digit(c); }

  bool at_end() const { return index_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const { return index_ + ahead < text_.size() ? text_[index_ + ahead] : '\0'; }

  SourcePos pos() const { return SourcePos{file_.path, line_, column_, index_}; }

  void
  advance()
  {
    if (text_[index_] == '\n')
    {
      ++line_;
      column_ = 1;
    }
    else
    {
      ++column_;
    }
    ++index_;
  }

  void
  check_charset(char c) const
  {
    auto u = static_cast<unsigned char>(c);
    bool printable = u >= 0x20 && u < 0x7f;
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    if (!printable && !space)
      throw LexError("illegal character (code " + std::to_string(u) + ")", pos());
  }

  void
  skip_space()
  {
    while (!at_end())
    {
      char c = peek();
      check_charset(c);
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
        advance();
      else
        break;
    }
  }

  std::optional<Token>
  block_comment(const SourcePos& start)
  {
    advance();
    advance();
    std::string body;
    while (true)
    {
      if (at_end())
        throw LexError("unterminated comment", start);
      if (peek() == '*' && peek(1) == '/')
      {
        advance();
        advance();
        break;
      }
      check_charset(peek());
      body.push_back(peek());
      advance();
    }
    constexpr std::string_view kSelector = "@selector(";
    if (body.rfind(kSelector, 0) == 0 && body.size() > kSelector.size() && body.back() == ')')
    {
      std::string field = body.substr(kSelector.size(), body.size() - kSelector.size() - 1);
      bool ok = !field.empty() && is_ident_start(field[0]);
      for (char c : field)
        ok = ok && is_ident(c);
      if (!ok)
        throw LexError("malformed selector pragma", start);
      return Token{TokenKind::SelectorPragma, field, 0, start};
    }
    return std::nullopt;
  }

  Token
  identifier(const SourcePos& start)
  {
    std::string word;
    while (!at_end() && is_ident(peek()))
    {
      word.push_back(peek());
      advance();
    }
    return Token{is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, word, 0, start};
  }

  Token
  number(const SourcePos& start)
  {
    std::string spelling;
    std::uint64_t value = 0;
    if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X'))
    {
      spelling += peek();
      advance();
      spelling += peek();
      advance();
      bool any = false;
      while (!at_end() && std::isxdigit(static_cast<unsigned char>(peek())))
      {
        char c = peek();
        int digit = is_digit(c) ? c - '0' : (std::tolower(c) - 'a' + 10);
        value = value * 16 + static_cast<std::uint64_t>(digit);
        spelling += c;
        advance();
        any = true;
      }
      if (!any)
        throw LexError("malformed hexadecimal literal", start);
    }
    else
    {
      bool octal = peek() == '0';
      while (!at_end() && is_digit(peek()))
      {
        char c = peek();
        if (octal && c > '7')
          throw LexError("malformed octal literal", start);
        value = value * (octal ? 8 : 10) + static_cast<std::uint64_t>(c - '0');
        spelling += c;
        advance();
      }
    }
    while (!at_end() && (peek() == 'u' || peek() == 'U' || peek() == 'l' || peek() == 'L'))
    {
      spelling += peek();
      advance();
    }
    if (!at_end() && is_ident(peek()))
      throw LexError("malformed integer literal", start);
    return Token{TokenKind::IntLiteral, spelling, static_cast<std::int64_t>(value), start};
  }

  char
  escape(const SourcePos& start)
  {
    advance(); // backslash
    if (at_end())
      throw LexError("unterminated escape sequence", start);
    char c = peek();
    advance();
    switch (c)
    {
    case 'n':
      return '\n';
    case 't':
      return '\t';
    case 'r':
      return '\r';
    case '0':
      return '\0';
    case '\\':
      return '\\';
    case '\'':
      return '\'';
    case '"':
      return '"';
    case 'x':
    {
      int v = 0;
      int n = 0;
      while (!at_end() && std::isxdigit(static_cast<unsigned char>(peek())) && n < 2)
      {
        char h = peek();
        v = v * 16 + (is_digit(h) ? h - '0' : std::tolower(h) - 'a' + 10);
        advance();
        ++n;
      }
      if (n == 0)
        throw LexError("malformed hex escape", start);
      return static_cast<char>(v);
    }
    default:
      throw LexError(std::string("unknown escape '\\") + c + "'", start);
    }
  }

  Token
  char_literal(const SourcePos& start)
  {
    std::size_t begin = index_;
    advance();
    if (at_end() || peek() == '\n' || peek() == '\'')
      throw LexError("unterminated or empty character literal", start);
    char value = peek() == '\\' ? escape(start) : (advance(), text_[index_ - 1]);
    if (at_end() || peek() != '\'')
      throw LexError("unterminated character literal", start);
    advance();
    return Token{TokenKind::CharLiteral, text_.substr(begin, index_ - begin), static_cast<unsigned char>(value), start};
  }

  Token
  string_literal(const SourcePos& start)
  {
    advance();
    std::string value;
    while (true)
    {
      if (at_end() || peek() == '\n')
        throw LexError("unterminated string literal", start);
      check_charset(peek());
      if (peek() == '"')
      {
        advance();
        break;
      }
      if (peek() == '\\')
        value.push_back(escape(start));
      else
      {
        value.push_back(peek());
        advance();
      }
    }
    return Token{TokenKind::StringLiteral, value, 0, start};
  }

  Token
  punct(const SourcePos& start)
  {
    std::string_view rest(text_.data() + index_, text_.size() - index_);
    for (std::string_view p : kPuncts)
    {
      if (rest.substr(0, p.size()) == p)
      {
        for (std::size_t i = 0; i < p.size(); ++i)
          advance();
        return Token{TokenKind::Punct, std::string(p), 0, start};
      }
    }
    check_charset(peek());
    throw LexError(std::string("illegal character '") + peek() + "'", start);
  }

  const SourceFile& file_;
  const std::string& text_;
  std::size_t index_ = 0;
  int line_ = 1;
  int column_ = 1;
};

} // namespace

bool
is_keyword(const std::string& word)
{
  for (const char* k : kKeywords)
    if (word == k)
      return true;
  return false;
}

std::vector<Token>
tokenize(const SourceFile& file)
{
  return Lexer(file).run();
}

} // namespace civ::frontend
