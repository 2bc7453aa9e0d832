#pragma once

// Lexer and recursive-descent parser for .mc sources.

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ptwb/ast.hpp"
#include "ptwb/error.hpp"

namespace ptwb {

struct SourceFile {
  std::string name;
  std::string text;
};

struct SourceProgram {
  std::vector<SourceFile> files;
  std::string entry_name = "main";
};

inline SourceFile read_source_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return {path, buf.str()};
}

namespace detail {

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long value = 0;
  int line = 0;
  int col = 0;
};

inline std::vector<Token> lex(const SourceFile& src) {
  std::vector<Token> out;
  const std::string& s = src.text;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < s.size(); ++k, ++i) {
      if (s[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  static const char* kTwoChar[] = {"==", "!=", "<=", ">=", "&&", "||", "->"};
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
      while (i < s.size() && s[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      int start_line = line;
      advance(2);
      while (i + 1 < s.size() && !(s[i] == '*' && s[i + 1] == '/')) advance(1);
      if (i + 1 >= s.size()) throw InputError(src.name, start_line, "unterminated comment");
      advance(2);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = s.substr(i, j - i);
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      int base = 10;
      if (c == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        base = 16;
        j += 2;
        while (j < s.size() && std::isxdigit(static_cast<unsigned char>(s[j]))) ++j;
      } else {
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (std::isalpha(static_cast<unsigned char>(s[j])) || s[j] == '_'))
        throw InputError(src.name, line, "malformed number");
      t.kind = Tok::Number;
      t.text = s.substr(i, j - i);
      try {
        t.value = std::stoll(base == 16 ? t.text.substr(2) : t.text, nullptr, base);
      } catch (const std::exception&) {
        throw InputError(src.name, line, "malformed number '" + t.text + "'");
      }
      advance(j - i);
    } else {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      for (const char* two : kTwoChar) {
        if (s.compare(i, 2, two) == 0) {
          t.text = two;
          break;
        }
      }
      if (std::string("{}()[];,=*&.+-/%<>!").find(c) == std::string::npos)
        throw InputError(src.name, line, std::string("unexpected character '") + c + "'");
      advance(t.text.size());
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(const SourceFile& src, ast::Program& out) : src_(src), out_(out), toks_(lex(src)) {}

  void parse_unit() {
    while (peek().kind != Tok::End) parse_top_level();
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool is(const char* text, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return (t.kind == Tok::Punct || t.kind == Tok::Ident) && t.text == text;
  }
  Token take() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(const char* text) {
    if (!is(text)) return false;
    take();
    return true;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    std::string near = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw InputError(src_.name, t.line, msg + " near " + near);
  }
  Token expect(const char* text) {
    if (!is(text)) fail(std::string("expected '") + text + "'");
    return take();
  }
  std::string expect_ident() {
    if (peek().kind != Tok::Ident || is_keyword(peek().text)) fail("expected identifier");
    return take().text;
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kw = {"int", "void", "struct", "const", "if",
                                             "else", "while", "return", "NULL"};
    return kw.count(s) != 0;
  }
  bool at_type_start() const { return is("int") || is("void") || is("struct") || is("const"); }

  ast::Type parse_base_type() {
    ast::Type t;
    if (accept("const")) t.is_const = true;
    if (accept("int")) {
      t.base = ast::Type::Base::Int;
    } else if (accept("void")) {
      t.base = ast::Type::Base::Void;
    } else if (accept("struct")) {
      t.base = ast::Type::Base::Struct;
      t.struct_name = expect_ident();
    } else {
      fail("expected type");
    }
    return t;
  }

  /// Parses pointer stars, the declared name and an optional array suffix or
  /// function-pointer parameter list. `name_out` receives the identifier.
  ast::Type parse_declarator(ast::Type base, std::string& name_out, int& line, int& col) {
    while (accept("*")) ++base.ptr;
    if (is("(") && is("*", 1)) {
      take();
      int stars = 0;
      while (accept("*")) ++stars;
      line = peek().line;
      col = peek().col;
      name_out = expect_ident();
      expect(")");
      ast::Type fn;
      fn.base = ast::Type::Base::Func;
      fn.ptr = stars;
      fn.is_const = base.is_const;
      base.is_const = false;
      fn.fn_return = std::make_shared<const ast::Type>(base);
      fn.fn_arity = parse_param_types();
      return fn;
    }
    line = peek().line;
    col = peek().col;
    name_out = expect_ident();
    if (accept("[")) {
      if (peek().kind != Tok::Number) fail("expected array size");
      base.array_size = take().value;
      expect("]");
    }
    return base;
  }

  /// Parameter list of a function-pointer type; only the arity is kept.
  int parse_param_types() {
    expect("(");
    if (accept(")")) return 0;
    if (is("void") && is(")", 1)) {
      take();
      take();
      return 0;
    }
    if (is(".")) {
      expect(".");
      expect(".");
      expect(".");
      expect(")");
      return -1;
    }
    int n = 0;
    do {
      ast::Type base = parse_base_type();
      while (accept("*")) ++base.ptr;
      if (peek().kind == Tok::Ident && !is_keyword(peek().text)) take();
      ++n;
    } while (accept(","));
    expect(")");
    return n;
  }

  void parse_top_level() {
    int line = peek().line;
    if (is("struct") && peek(1).kind == Tok::Ident && is("{", 2)) {
      take();
      ast::StructDecl sd;
      sd.name = take().text;
      sd.file = src_.name;
      sd.line = line;
      expect("{");
      while (!accept("}")) {
        ast::VarDecl field;
        ast::Type base = parse_base_type();
        field.type = parse_declarator(base, field.name, field.line, field.col);
        expect(";");
        sd.fields.push_back(std::move(field));
      }
      expect(";");
      out_.structs.push_back(std::move(sd));
      return;
    }
    if (!at_type_start()) fail("expected declaration");
    ast::Type base = parse_base_type();
    // Function definition or prototype: type '*'* name '('
    std::size_t save = pos_;
    int ptr = 0;
    while (is("*", static_cast<std::size_t>(ptr))) ++ptr;
    if (peek(ptr).kind == Tok::Ident && is("(", ptr + 1)) {
      for (int k = 0; k < ptr; ++k) take();
      ast::Function fn;
      fn.ret = base;
      fn.ret.ptr = ptr;
      fn.line = peek().line;
      fn.name = expect_ident();
      fn.file = src_.name;
      parse_params(fn);
      if (accept(";")) {
        out_.functions.push_back(std::move(fn));
        return;
      }
      fn.body = parse_block_body();
      out_.functions.push_back(std::move(fn));
      return;
    }
    pos_ = save;
    do {
      ast::GlobalVar g;
      g.file = src_.name;
      g.decl.type = parse_declarator(base, g.decl.name, g.decl.line, g.decl.col);
      if (accept("=")) g.decl.init = parse_expr();
      out_.globals.push_back(std::move(g));
    } while (accept(","));
    expect(";");
  }

  void parse_params(ast::Function& fn) {
    expect("(");
    if (accept(")")) return;
    if (is("void") && is(")", 1)) {
      take();
      take();
      return;
    }
    do {
      ast::VarDecl p;
      ast::Type base = parse_base_type();
      p.type = parse_declarator(base, p.name, p.line, p.col);
      fn.params.push_back(std::move(p));
    } while (accept(","));
    expect(")");
  }

  std::vector<ast::StmtPtr> parse_block_body() {
    expect("{");
    std::vector<ast::StmtPtr> body;
    while (!accept("}")) {
      if (peek().kind == Tok::End) fail("expected '}'");
      parse_statement(body);
    }
    return body;
  }

  std::vector<ast::StmtPtr> parse_sub_statement() {
    std::vector<ast::StmtPtr> body;
    if (is("{"))
      body = parse_block_body();
    else
      parse_statement(body);
    return body;
  }

  ast::StmtPtr make_stmt(ast::StmtKind kind, const Token& at) {
    auto s = std::make_unique<ast::Stmt>();
    s->kind = kind;
    s->line = at.line;
    s->col = at.col;
    return s;
  }

  void parse_statement(std::vector<ast::StmtPtr>& out) {
    const Token start = peek();
    if (is("{")) {
      auto s = make_stmt(ast::StmtKind::Block, start);
      s->body = parse_block_body();
      out.push_back(std::move(s));
      return;
    }
    if (accept(";")) return;
    if (accept("if")) {
      auto s = make_stmt(ast::StmtKind::If, start);
      expect("(");
      s->expr = parse_expr();
      expect(")");
      s->body = parse_sub_statement();
      if (accept("else")) s->else_body = parse_sub_statement();
      out.push_back(std::move(s));
      return;
    }
    if (accept("while")) {
      auto s = make_stmt(ast::StmtKind::While, start);
      expect("(");
      s->expr = parse_expr();
      expect(")");
      s->body = parse_sub_statement();
      out.push_back(std::move(s));
      return;
    }
    if (accept("return")) {
      auto s = make_stmt(ast::StmtKind::Return, start);
      if (!is(";")) s->expr = parse_expr();
      expect(";");
      out.push_back(std::move(s));
      return;
    }
    if (at_type_start()) {
      ast::Type base = parse_base_type();
      do {
        auto s = make_stmt(ast::StmtKind::Decl, start);
        s->decl.type = parse_declarator(base, s->decl.name, s->decl.line, s->decl.col);
        s->line = s->decl.line;
        if (accept("=")) s->decl.init = parse_expr();
        out.push_back(std::move(s));
      } while (accept(","));
      expect(";");
      return;
    }
    ast::ExprPtr e = parse_expr();
    if (accept("=")) {
      auto s = make_stmt(ast::StmtKind::Assign, start);
      s->lhs = std::move(e);
      s->expr = parse_expr();
      expect(";");
      out.push_back(std::move(s));
      return;
    }
    auto s = make_stmt(ast::StmtKind::Expr, start);
    s->expr = std::move(e);
    expect(";");
    out.push_back(std::move(s));
  }

  ast::ExprPtr make_expr(ast::ExprKind kind, const Token& at) {
    auto e = std::make_unique<ast::Expr>();
    e->kind = kind;
    e->line = at.line;
    e->col = at.col;
    return e;
  }

  ast::ExprPtr parse_expr() { return parse_binary(0); }

  static int precedence(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/" || op == "%") return 6;
    return 0;
  }

  ast::ExprPtr parse_binary(int min_prec) {
    ast::ExprPtr lhs = parse_unary();
    while (peek().kind == Tok::Punct) {
      int prec = precedence(peek().text);
      if (prec == 0 || prec <= min_prec) break;
      Token op = take();
      auto e = make_expr(ast::ExprKind::Binary, op);
      e->name = op.text;
      e->kids.push_back(std::move(lhs));
      e->kids.push_back(parse_binary(prec));
      lhs = std::move(e);
    }
    return lhs;
  }

  ast::ExprPtr parse_unary() {
    const Token t = peek();
    if (accept("*")) {
      auto e = make_expr(ast::ExprKind::Deref, t);
      e->kids.push_back(parse_unary());
      return e;
    }
    if (accept("&")) {
      auto e = make_expr(ast::ExprKind::AddrOf, t);
      e->kids.push_back(parse_unary());
      return e;
    }
    if (accept("!") || accept("-")) {
      auto e = make_expr(ast::ExprKind::Unary, t);
      e->name = t.text;
      e->kids.push_back(parse_unary());
      return e;
    }
    return parse_postfix();
  }

  ast::ExprPtr parse_postfix() {
    ast::ExprPtr e = parse_primary();
    for (;;) {
      const Token t = peek();
      if (accept("(")) {
        static const std::set<std::string> kAllocators = {"malloc", "calloc", "alloc"};
        bool is_alloc = e->kind == ast::ExprKind::Var && kAllocators.count(e->name) != 0;
        auto call = make_expr(is_alloc ? ast::ExprKind::Alloc : ast::ExprKind::Call, *e);
        if (is_alloc)
          call->name = e->name;
        else
          call->kids.push_back(std::move(e));
        if (!accept(")")) {
          do {
            call->kids.push_back(parse_expr());
          } while (accept(","));
          expect(")");
        }
        e = std::move(call);
      } else if (accept("[")) {
        auto idx = make_expr(ast::ExprKind::Index, t);
        idx->kids.push_back(std::move(e));
        idx->kids.push_back(parse_expr());
        expect("]");
        e = std::move(idx);
      } else if (accept(".")) {
        auto m = make_expr(ast::ExprKind::Member, t);
        m->name = expect_ident();
        m->kids.push_back(std::move(e));
        e = std::move(m);
      } else if (is("->")) {
        fail("member access through a pointer ('->') is not supported");
      } else {
        return e;
      }
    }
  }

  ast::ExprPtr make_expr(ast::ExprKind kind, const ast::Expr& at) {
    auto e = std::make_unique<ast::Expr>();
    e->kind = kind;
    e->line = at.line;
    e->col = at.col;
    return e;
  }

  ast::ExprPtr parse_primary() {
    const Token t = peek();
    if (t.kind == Tok::Number) {
      take();
      auto e = make_expr(ast::ExprKind::IntLit, t);
      e->value = t.value;
      return e;
    }
    if (accept("NULL")) return make_expr(ast::ExprKind::Null, t);
    if (accept("(")) {
      ast::ExprPtr e = parse_expr();
      expect(")");
      return e;
    }
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      take();
      auto e = make_expr(ast::ExprKind::Var, t);
      e->name = t.text;
      return e;
    }
    fail("expected expression");
  }

  const SourceFile& src_;
  ast::Program& out_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses every file of `source` into one program. Name resolution happens in lowering.
inline ast::Program parse(const SourceProgram& source) {
  ast::Program program;
  for (const SourceFile& f : source.files) {
    detail::Parser p(f, program);
    p.parse_unit();
  }
  return program;
}

inline ast::Program parse(const SourceFile& file) {
  SourceProgram sp;
  sp.files.push_back(file);
  return parse(sp);
}

}  // namespace ptwb
