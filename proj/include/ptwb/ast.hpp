#pragma once

// Syntax tree for the C-like input language (.mc files).

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ptwb::ast {

struct Type {
  enum class Base { Int, Void, Struct, Func };

  Base base = Base::Int;
  std::string struct_name;
  int ptr = 0;  // pointer depth; a function pointer is Func with ptr >= 1
  bool is_const = false;
  std::optional<long long> array_size;
  // Function pointers only.
  std::shared_ptr<const Type> fn_return;
  int fn_arity = -1;  // -1 when the parameter list was "(...)"

  bool is_pointer() const { return ptr > 0 && !array_size; }
  bool is_struct_value() const { return base == Base::Struct && ptr == 0 && !array_size; }
  bool is_function_pointer() const { return base == Base::Func && ptr >= 1; }

  Type pointee() const {
    Type t = *this;
    --t.ptr;
    t.is_const = false;
    t.array_size.reset();
    return t;
  }
  Type address_of() const {
    Type t = *this;
    ++t.ptr;
    t.is_const = false;
    t.array_size.reset();
    return t;
  }
};

enum class ExprKind { Var, IntLit, Null, AddrOf, Deref, Member, Index, Call, Binary, Unary, Alloc };

struct Expr {
  ExprKind kind = ExprKind::Var;
  int line = 0;
  int col = 0;
  std::string name;  // Var name, Member field, operator spelling, allocator name
  long long value = 0;
  std::vector<std::unique_ptr<Expr>> kids;

  const Expr& kid(std::size_t i) const { return *kids.at(i); }
};
using ExprPtr = std::unique_ptr<Expr>;

struct VarDecl {
  std::string name;
  Type type;
  ExprPtr init;
  int line = 0;
  int col = 0;
};

enum class StmtKind { Decl, Assign, Expr, If, While, Return, Block };

struct Stmt {
  StmtKind kind = StmtKind::Block;
  int line = 0;
  int col = 0;
  VarDecl decl;
  ExprPtr lhs;   // Assign
  ExprPtr expr;  // Assign rhs, Expr, If/While condition, Return value
  std::vector<std::unique_ptr<Stmt>> body;       // Block, If-then, While
  std::vector<std::unique_ptr<Stmt>> else_body;  // If
};
using StmtPtr = std::unique_ptr<Stmt>;

struct StructDecl {
  std::string name;
  std::vector<VarDecl> fields;
  std::string file;
  int line = 0;
};

struct GlobalVar {
  VarDecl decl;
  std::string file;
};

struct Function {
  std::string name;
  Type ret;
  std::vector<VarDecl> params;
  std::optional<std::vector<StmtPtr>> body;  // empty optional for prototypes
  std::string file;
  int line = 0;
};

struct Program {
  std::vector<StructDecl> structs;
  std::vector<GlobalVar> globals;
  std::vector<Function> functions;
};

inline std::string to_string(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Var: return e.name;
    case ExprKind::IntLit: return std::to_string(e.value);
    case ExprKind::Null: return "NULL";
    case ExprKind::AddrOf: return "&" + to_string(e.kid(0));
    case ExprKind::Deref: return "*" + to_string(e.kid(0));
    case ExprKind::Member: return to_string(e.kid(0)) + "." + e.name;
    case ExprKind::Index: return to_string(e.kid(0)) + "[" + to_string(e.kid(1)) + "]";
    case ExprKind::Unary: return e.name + to_string(e.kid(0));
    case ExprKind::Binary:
      return "(" + to_string(e.kid(0)) + " " + e.name + " " + to_string(e.kid(1)) + ")";
    case ExprKind::Call:
    case ExprKind::Alloc: {
      std::string out = e.kind == ExprKind::Alloc ? e.name : to_string(e.kid(0));
      out += "(";
      for (std::size_t i = e.kind == ExprKind::Alloc ? 0 : 1; i < e.kids.size(); ++i) {
        if (out.back() != '(') out += ", ";
        out += to_string(e.kid(i));
      }
      return out + ")";
    }
  }
  return "?";
}

}  // namespace ptwb::ast
