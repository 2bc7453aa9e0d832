#pragma once

// Name resolution, type checking and lowering of the syntax tree into
// ProgramIR. Aggregates are split into per-field locations, arrays collapse
// to one monolithic location and each heap call becomes Heap(line).

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "ptwb/ast.hpp"
#include "ptwb/error.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/parser.hpp"

namespace ptwb {

namespace detail {

using ast::Expr;
using ast::ExprKind;
using ast::Stmt;
using ast::StmtKind;
using ast::Type;

struct Symbol {
  LocId loc;
  Type type;
  bool is_global = false;
  std::string owner_prefix;  // "" for globals, "main::" for locals of main
  std::string name;
};

/// Value produced by an expression in pointer context.
struct RValue {
  enum class Kind { Scalar, Key, Addr, Alloc };
  Kind kind = Kind::Scalar;
  LocId loc;
  int alloc_line = 0;
  AllocKind alloc_kind = AllocKind::Malloc;
  bool literal = false;
};

struct LValue {
  bool indirect = false;  // *ptr when true, the location itself otherwise
  LocId loc;
  Type type;
  bool literal = false;
  std::string text;
};

class Lowerer {
 public:
  Lowerer(const ast::Program& prog, std::string entry) : prog_(prog), entry_name_(std::move(entry)) {}

  ProgramIR run() {
    collect_structs();
    collect_functions();
    collect_globals();
    for (std::size_t i = 0; i < defined_.size(); ++i) lower_function(*defined_[i], static_cast<FuncId>(i));
    auto entry = ir_.find_function(entry_name_);
    if (!entry) throw InputError(ir_.files.empty() ? "<input>" : ir_.files.front(), 0,
                                 "entry function '" + entry_name_ + "' not found");
    ir_.entry = *entry;
    std::sort(ir_.pcg_edges.begin(), ir_.pcg_edges.end());
    return std::move(ir_);
  }

 private:
  // Declarations ------------------------------------------------------------

  int file_index(const std::string& name) {
    for (std::size_t i = 0; i < ir_.files.size(); ++i)
      if (ir_.files[i] == name) return static_cast<int>(i);
    ir_.files.push_back(name);
    return static_cast<int>(ir_.files.size() - 1);
  }

  [[noreturn]] void fail(int line, const std::string& msg) const { throw InputError(cur_file_, line, msg); }

  void collect_structs() {
    for (const auto& s : prog_.structs) {
      cur_file_ = s.file;
      file_index(s.file);
      if (structs_.count(s.name)) fail(s.line, "duplicate struct '" + s.name + "'");
      std::set<std::string> seen;
      for (const auto& f : s.fields) {
        if (!seen.insert(f.name).second) fail(f.line, "duplicate field '" + f.name + "'");
        if (f.type.array_size) fail(f.line, "array fields are not supported");
        if (f.type.is_struct_value()) fail(f.line, "nested struct fields are not supported");
      }
      structs_[s.name] = &s;
    }
  }

  void collect_functions() {
    for (const auto& fn : prog_.functions) {
      cur_file_ = fn.file;
      file_index(fn.file);
      if (!fn.body) {
        declared_only_.insert(fn.name);
        continue;
      }
      if (function_ids_.count(fn.name)) fail(fn.line, "duplicate function definition '" + fn.name + "'");
      FuncId id = static_cast<FuncId>(defined_.size());
      function_ids_[fn.name] = id;
      defined_.push_back(&fn);
      FunctionIR f;
      f.id = id;
      f.name = fn.name;
      f.file = file_index(fn.file);
      f.line = fn.line;
      ir_.functions.push_back(std::move(f));
      LocInfo info;
      info.kind = LocKind::Func;
      info.name = "fn:" + fn.name;
      info.display = fn.name;
      info.func = id;
      ir_.locs.intern(info);
    }
    for (const auto& name : declared_only_) function_ids_.try_emplace(name, -1);
  }

  void check_type(const Type& t, int line) const {
    if (t.base == Type::Base::Struct && !structs_.count(t.struct_name))
      fail(line, "unknown struct '" + t.struct_name + "'");
    if (t.base == Type::Base::Void && t.ptr == 0) fail(line, "variable of type void");
    if (t.base == Type::Base::Struct && t.ptr > 0)
      fail(line, "pointers to structs are not supported; take field addresses instead");
    if (t.array_size && t.base == Type::Base::Struct) fail(line, "arrays of structs are not supported");
  }

  /// Creates the location(s) for a declared variable; returns the symbol.
  Symbol declare(const ast::VarDecl& d, bool global, FuncId owner, const std::string& fn_name,
                 bool formal, std::vector<LocId>* pointer_keys) {
    check_type(d.type, d.line);
    Symbol sym;
    sym.type = d.type;
    sym.is_global = global;
    sym.owner_prefix = global ? "" : fn_name + "::";
    sym.name = d.name;
    LocInfo info;
    info.owner = global ? kNoFunction : owner;
    info.display = sym.owner_prefix + d.name;
    info.is_formal = formal;
    info.is_const = d.type.is_const && d.type.ptr > 0;
    if (d.type.array_size) {
      info.kind = LocKind::Array;
      info.name = "arr:" + info.display;
      info.pointer_depth = d.type.ptr;
    } else {
      info.kind = LocKind::Var;
      info.name = (global ? "g:" : "l:") + info.display;
      info.pointer_depth = d.type.ptr;
    }
    if (ir_.locs.find(info.name)) fail(d.line, "redeclaration of '" + d.name + "'");
    sym.loc = ir_.locs.intern(info);
    if (pointer_keys && info.pointer_depth > 0) pointer_keys->push_back(sym.loc);
    if (d.type.is_struct_value()) {
      for (const auto& field : structs_.at(d.type.struct_name)->fields) {
        LocInfo fi;
        fi.kind = LocKind::Field;
        fi.owner = info.owner;
        fi.display = info.display + "." + field.name;
        fi.name = "f:" + d.type.struct_name + "::" + field.name + "@" + info.display;
        fi.pointer_depth = field.type.ptr;
        LocId fid = ir_.locs.intern(fi);
        fields_[{sym.loc.value, field.name}] = {fid, field.type};
        if (pointer_keys && fi.pointer_depth > 0) pointer_keys->push_back(fid);
      }
    }
    return sym;
  }

  void collect_globals() {
    for (const auto& g : prog_.globals) {
      cur_file_ = g.file;
      int file = file_index(g.file);
      if (function_ids_.count(g.decl.name)) fail(g.decl.line, "'" + g.decl.name + "' redeclared as a variable");
      std::vector<LocId> keys;
      Symbol sym = declare(g.decl, true, kNoFunction, "", false, &keys);
      globals_[g.decl.name] = sym;
      const Type& t = g.decl.type;
      bool is_ptr = t.ptr > 0 && !t.array_size;
      if (t.is_const && is_ptr && !g.decl.init)
        fail(g.decl.line, "const pointer '" + g.decl.name + "' requires an initializer");
      if (g.decl.init && (t.array_size || t.is_struct_value()))
        fail(g.decl.line, "initializers are only supported for scalars and pointers");
      for (LocId k : keys) {
        GlobalDecl gd;
        gd.var = k;
        gd.pointer_depth = ir_.locs[k].pointer_depth;
        gd.is_const_pointer = k == sym.loc && t.is_const && is_ptr;
        gd.file = file;
        gd.line = g.decl.line;
        if (k == sym.loc && g.decl.init) gd.initializer = static_initializer(*g.decl.init, t);
        ir_.globals.push_back(gd);
      }
      if (!is_ptr && g.decl.init && g.decl.init->kind != ExprKind::IntLit && g.decl.init->kind != ExprKind::Unary)
        fail(g.decl.line, "non-constant initializer");
    }
  }

  LocId literal_location(long long value) {
    LocInfo info;
    info.kind = LocKind::Addr;
    info.name = "addr:" + std::to_string(value);
    info.display = info.name;
    info.pointer_depth = 0;
    return ir_.locs.intern(info);
  }

  LocId heap_location(int line, int depth) {
    LocInfo info;
    info.kind = LocKind::Heap;
    info.name = "heap:" + std::to_string(line);
    info.display = info.name;
    info.heap_line = line;
    LocId id = ir_.locs.intern(info);
    auto& stored = ir_.locs.mutable_info(id);
    stored.pointer_depth = std::max(stored.pointer_depth, depth);
    return id;
  }

  LocId func_location(FuncId f) { return *ir_.locs.find("fn:" + defined_[static_cast<std::size_t>(f)]->name); }

  /// Address constant of a global initializer.
  LocId static_initializer(const Expr& e, const Type& target) {
    switch (e.kind) {
      case ExprKind::Null: return kNullLoc;
      case ExprKind::IntLit:
        if (e.value == 0) return kNullLoc;
        if (target.ptr != 1 || target.base == Type::Base::Func)
          fail(e.line, "integer address constants are only allowed for single-level data pointers");
        return literal_location(e.value);
      case ExprKind::Var: {
        if (auto it = globals_.find(e.name); it != globals_.end() && it->second.type.array_size)
          return it->second.loc;
        if (auto it = function_ids_.find(e.name); it != function_ids_.end() && it->second >= 0) {
          ir_.functions[static_cast<std::size_t>(it->second)].address_taken = true;
          return func_location(it->second);
        }
        break;
      }
      case ExprKind::AddrOf: {
        const Expr& inner = e.kid(0);
        if (inner.kind == ExprKind::Var) {
          if (auto it = globals_.find(inner.name); it != globals_.end()) return it->second.loc;
          if (auto it = function_ids_.find(inner.name); it != function_ids_.end() && it->second >= 0) {
            ir_.functions[static_cast<std::size_t>(it->second)].address_taken = true;
            return func_location(it->second);
          }
        }
        if (inner.kind == ExprKind::Member && inner.kid(0).kind == ExprKind::Var) {
          auto it = globals_.find(inner.kid(0).name);
          if (it != globals_.end()) {
            auto fit = fields_.find({it->second.loc.value, inner.name});
            if (fit != fields_.end()) return fit->second.first;
          }
        }
        if (inner.kind == ExprKind::Index && inner.kid(0).kind == ExprKind::Var) {
          auto it = globals_.find(inner.kid(0).name);
          if (it != globals_.end() && it->second.type.array_size) return it->second.loc;
        }
        break;
      }
      default: break;
    }
    fail(e.line, "global initializer must be an address constant");
  }

  // Functions ----------------------------------------------------------------

  struct FunctionState {
    FunctionIR* f = nullptr;
    const ast::Function* src = nullptr;
    std::unordered_map<std::string, Symbol> locals;
    NodeId current = kEntryNode;  // -1 when the point is unreachable
    int temp_counter = 0;
    int file = 0;
    // statement being lowered
    int stmt_line = 0;
    int stmt_col = 0;
    int poi_counter = 0;
  };

  void lower_function(const ast::Function& fn, FuncId id) {
    cur_file_ = fn.file;
    FunctionState st;
    st.f = &ir_.functions[static_cast<std::size_t>(id)];
    st.src = &fn;
    st.file = st.f->file;
    fs_ = &st;
    if (fn.ret.base == Type::Base::Struct && fn.ret.ptr == 0) fail(fn.line, "struct return values are not supported");
    st.f->nodes.push_back(make_node(NodeKind::Entry));
    st.f->nodes.push_back(make_node(NodeKind::Exit));
    st.f->succ.resize(2);
    st.f->pred.resize(2);
    for (auto& n : st.f->nodes) {
      n.file = st.file;
      n.line = fn.line;
    }
    for (const auto& p : fn.params) {
      if (p.type.is_struct_value() || p.type.array_size) fail(p.line, "struct and array parameters are not supported");
      if (st.locals.count(p.name)) fail(p.line, "duplicate parameter '" + p.name + "'");
      Symbol sym = declare(p, false, id, fn.name, true, nullptr);
      st.locals[p.name] = sym;
      st.f->params.push_back(sym.loc);
      st.f->private_keys.push_back(sym.loc);
    }
    if (fn.ret.ptr > 0) {
      LocInfo info;
      info.kind = LocKind::Var;
      info.owner = id;
      info.display = fn.name + "::__ret";
      info.name = "l:" + info.display;
      info.pointer_depth = fn.ret.ptr;
      info.is_return_slot = true;
      st.f->ret_slot = ir_.locs.intern(info);
      st.f->private_keys.push_back(*st.f->ret_slot);
    }
    for (const auto& s : *fn.body) lower_stmt(*s);
    if (st.current >= 0) add_edge(st.current, kExitNode);
    prune_unreachable(*st.f);
    fs_ = nullptr;
  }

  void add_edge(NodeId from, NodeId to) {
    auto& f = *fs_->f;
    f.succ[static_cast<std::size_t>(from)].push_back(to);
    f.pred[static_cast<std::size_t>(to)].push_back(from);
  }

  NodeId new_node(Node n) {
    auto& f = *fs_->f;
    n.file = fs_->file;
    if (n.line == 0) {
      n.line = fs_->stmt_line;
      n.col = fs_->stmt_col;
    }
    f.nodes.push_back(std::move(n));
    f.succ.emplace_back();
    f.pred.emplace_back();
    return static_cast<NodeId>(f.nodes.size() - 1);
  }

  /// Appends a node after the current program point.
  NodeId emit(Node n) {
    NodeId id = new_node(std::move(n));
    if (fs_->current >= 0) add_edge(fs_->current, id);
    fs_->current = id;
    return id;
  }

  NodeId emit_poi(Node n, const std::string& text, bool literal = false) {
    n.poi_level = ++fs_->poi_counter;
    n.text = text;
    n.literal_address = literal;
    return emit(std::move(n));
  }

  /// Drops nodes unreachable from Entry and renumbers the rest, keeping the
  /// direct-call edges of `f` in step.
  void prune_unreachable(FunctionIR& f) {
    std::vector<NodeId> order(f.size(), -1);
    std::vector<NodeId> stack{kEntryNode};
    std::vector<bool> seen(f.size(), false);
    seen[kEntryNode] = true;
    while (!stack.empty()) {
      NodeId n = stack.back();
      stack.pop_back();
      for (NodeId s : f.succ[static_cast<std::size_t>(n)])
        if (!seen[static_cast<std::size_t>(s)]) {
          seen[static_cast<std::size_t>(s)] = true;
          stack.push_back(s);
        }
    }
    seen[kExitNode] = true;
    NodeId next = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (seen[i]) order[i] = next++;
    if (next == static_cast<NodeId>(f.size())) return;
    std::vector<PcgEdge> edges;
    for (const PcgEdge& e : ir_.pcg_edges) {
      if (e.caller != f.id) {
        edges.push_back(e);
      } else if (seen[static_cast<std::size_t>(e.call)]) {
        edges.push_back({e.caller, order[static_cast<std::size_t>(e.call)], e.callee});
      }
    }
    ir_.pcg_edges = std::move(edges);
    FunctionIR out = f;
    out.nodes.clear();
    out.succ.assign(static_cast<std::size_t>(next), {});
    out.pred.assign(static_cast<std::size_t>(next), {});
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (!seen[i]) continue;
      out.nodes.push_back(f.nodes[i]);
      for (NodeId s : f.succ[i]) {
        out.succ[static_cast<std::size_t>(order[i])].push_back(order[static_cast<std::size_t>(s)]);
        out.pred[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])].push_back(order[i]);
      }
    }
    f = std::move(out);
  }

  // Statements ---------------------------------------------------------------

  void begin_statement(const Stmt& s) {
    fs_->stmt_line = s.line;
    fs_->stmt_col = s.col;
    fs_->poi_counter = 0;
  }

  void lower_block(const std::vector<ast::StmtPtr>& body) {
    for (const auto& s : body) lower_stmt(*s);
  }

  void lower_stmt(const Stmt& s) {
    begin_statement(s);
    switch (s.kind) {
      case StmtKind::Block: lower_block(s.body); break;
      case StmtKind::Decl: lower_decl(s); break;
      case StmtKind::Assign: lower_assign(*s.lhs, *s.expr, s.line); break;
      case StmtKind::Expr: lower_rvalue(*s.expr); break;
      case StmtKind::If: {
        lower_rvalue(*s.expr);
        begin_statement(s);
        NodeId br = emit(make_node(NodeKind::Branch));
        emit(make_node(NodeKind::Nop));
        lower_block(s.body);
        NodeId then_end = fs_->current;
        fs_->current = br;
        begin_statement(s);
        emit(make_node(NodeKind::Nop));
        lower_block(s.else_body);
        NodeId else_end = fs_->current;
        if (then_end < 0 && else_end < 0) {
          fs_->current = -1;
          break;
        }
        begin_statement(s);
        NodeId join = new_node(make_node(NodeKind::Nop));
        if (then_end >= 0) add_edge(then_end, join);
        if (else_end >= 0) add_edge(else_end, join);
        fs_->current = join;
        break;
      }
      case StmtKind::While: {
        begin_statement(s);
        NodeId head_pre = emit(make_node(NodeKind::Nop));
        lower_rvalue(*s.expr);
        begin_statement(s);
        Node hb = make_node(NodeKind::Branch);
        hb.loop_header = true;
        NodeId br = emit(hb);
        emit(make_node(NodeKind::Nop));
        lower_block(s.body);
        if (fs_->current >= 0) add_edge(fs_->current, head_pre);
        fs_->current = br;
        break;
      }
      case StmtKind::Return: {
        if (s.expr) {
          if (fs_->f->ret_slot) {
            lower_assign_to(LValue{false, *fs_->f->ret_slot, fs_->src->ret, false, {}}, *s.expr, s.line);
          } else {
            lower_rvalue(*s.expr);
          }
        }
        if (fs_->current >= 0) add_edge(fs_->current, kExitNode);
        fs_->current = -1;
        break;
      }
    }
  }

  void lower_decl(const Stmt& s) {
    const ast::VarDecl& d = s.decl;
    if (fs_->locals.count(d.name)) fail(d.line, "redeclaration of '" + d.name + "'");
    if (function_ids_.count(d.name)) fail(d.line, "'" + d.name + "' shadows a function");
    std::vector<LocId> keys;
    Symbol sym = declare(d, false, fs_->f->id, fs_->f->name, false, &keys);
    fs_->locals[d.name] = sym;
    auto collect_private = [&](LocId id) { fs_->f->private_keys.push_back(id); };
    collect_private(sym.loc);
    if (d.type.is_struct_value())
      for (const auto& field : structs_.at(d.type.struct_name)->fields)
        collect_private(fields_.at({sym.loc.value, field.name}).first);
    bool is_ptr = d.type.ptr > 0 && !d.type.array_size;
    if (d.type.is_const && is_ptr && !d.init) fail(d.line, "const pointer '" + d.name + "' requires an initializer");
    if (d.init) {
      if (d.type.array_size || d.type.is_struct_value())
        fail(d.line, "initializers are only supported for scalars and pointers");
      for (LocId k : keys)
        if (k != sym.loc) fs_->f->uninit_locals.push_back(k);
      lower_assign_to(LValue{false, sym.loc, d.type, false, {}}, *d.init, d.line);
    } else {
      for (LocId k : keys) fs_->f->uninit_locals.push_back(k);
    }
  }

  // Types ----------------------------------------------------------------------

  const Symbol* lookup_var(const std::string& name) const {
    if (auto it = fs_->locals.find(name); it != fs_->locals.end()) return &it->second;
    if (auto it = globals_.find(name); it != globals_.end()) return &it->second;
    return nullptr;
  }

  std::optional<FuncId> lookup_function(const std::string& name, int line) const {
    if (lookup_var(name)) return std::nullopt;
    auto it = function_ids_.find(name);
    if (it == function_ids_.end()) return std::nullopt;
    if (it->second < 0) fail(line, "function '" + name + "' is declared but not defined");
    return it->second;
  }

  static Type int_type() { return Type{}; }
  static Type void_ptr() {
    Type t;
    t.base = Type::Base::Void;
    t.ptr = 1;
    return t;
  }
  static Type element_type(const Type& t) {
    Type e = t;
    e.array_size.reset();
    return e;
  }
  /// Type of an expression used as a value (arrays decay, designators stay).
  static Type decay(const Type& t) {
    if (t.array_size) return element_type(t).address_of();
    return t;
  }

  Type function_designator(FuncId f) const {
    const ast::Function& fn = *defined_[static_cast<std::size_t>(f)];
    Type t;
    t.base = Type::Base::Func;
    t.ptr = 0;
    t.fn_return = std::make_shared<const Type>(fn.ret);
    t.fn_arity = static_cast<int>(fn.params.size());
    return t;
  }

  Type type_of(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::Var: {
        if (const Symbol* s = lookup_var(e.name)) return s->type;
        if (auto f = lookup_function(e.name, e.line)) return function_designator(*f);
        fail(e.line, "unknown identifier '" + e.name + "'");
      }
      case ExprKind::IntLit: return int_type();
      case ExprKind::Null: return void_ptr();
      case ExprKind::Alloc: return void_ptr();
      case ExprKind::Binary:
      case ExprKind::Unary:
        type_of(e.kid(0));
        if (e.kind == ExprKind::Binary) type_of(e.kid(1));
        return int_type();
      case ExprKind::AddrOf: {
        const Expr& inner = e.kid(0);
        if (inner.kind != ExprKind::Var && inner.kind != ExprKind::Deref && inner.kind != ExprKind::Member &&
            inner.kind != ExprKind::Index)
          fail(e.line, "taking the address of a temporary");
        Type t = type_of(inner);
        if (t.base == Type::Base::Func && t.ptr == 0) {
          Type p = t;
          p.ptr = 1;
          return p;
        }
        if (t.array_size) return element_type(t).address_of();
        if (t.is_struct_value()) fail(e.line, "pointers to structs are not supported");
        return t.address_of();
      }
      case ExprKind::Deref: {
        const Expr& inner = e.kid(0);
        if (inner.kind == ExprKind::IntLit) return int_type();
        Type t = type_of(inner);
        if (t.array_size) return element_type(t);
        if (t.base == Type::Base::Func && t.ptr == 1) {
          Type d = t;
          d.ptr = 0;
          return d;
        }
        if (t.ptr == 0) fail(e.line, "dereference of a non-pointer");
        if (t.base == Type::Base::Void && t.ptr == 1) fail(e.line, "dereference of a void pointer");
        return t.pointee();
      }
      case ExprKind::Member: {
        const Expr& base = e.kid(0);
        if (base.kind != ExprKind::Var) fail(e.line, "member access is only supported on struct variables");
        const Symbol* s = lookup_var(base.name);
        if (!s) fail(e.line, "unknown identifier '" + base.name + "'");
        if (!s->type.is_struct_value()) fail(e.line, "'" + base.name + "' is not a struct");
        auto it = fields_.find({s->loc.value, e.name});
        if (it == fields_.end()) fail(e.line, "no field '" + e.name + "' in '" + base.name + "'");
        return it->second.second;
      }
      case ExprKind::Index: {
        const Expr& base = e.kid(0);
        Type t = type_of(base);
        if (!t.array_size || base.kind != ExprKind::Var)
          fail(e.line, "indexing is only supported on array variables");
        type_of(e.kid(1));
        return element_type(t);
      }
      case ExprKind::Call: {
        Type t = type_of(e.kid(0));
        if (t.base != Type::Base::Func || t.ptr > 1) fail(e.line, "called object is not a function");
        return *t.fn_return;
      }
    }
    fail(e.line, "unsupported expression");
  }

  static bool pointer_like(const Type& t) {
    return (t.ptr > 0 && !t.array_size) || (t.base == Type::Base::Func);
  }

  void check_assignable(const Type& target, const Expr& rhs, int line) const {
    Type r = decay(type_of(rhs));
    bool target_ptr = target.ptr > 0;
    if (!target_ptr) {
      if (pointer_like(r)) fail(line, "assigning a pointer to a non-pointer");
      return;
    }
    if (rhs.kind == ExprKind::IntLit) {
      if (rhs.value != 0 && (target.ptr != 1 || target.base == Type::Base::Func))
        fail(line, "integer address constants are only allowed for single-level data pointers");
      return;
    }
    if (r.base == Type::Base::Void && r.ptr == 1) return;  // NULL or an allocator result
    if (r.base == Type::Base::Func && r.ptr == 0) r.ptr = 1;  // function designator decays
    if (!pointer_like(r)) fail(line, "assigning a non-pointer to a pointer");
    if (r.ptr != target.ptr || (r.base == Type::Base::Func) != (target.base == Type::Base::Func))
      fail(line, "incompatible pointer types in assignment");
  }

  // Expressions ----------------------------------------------------------------

  LocId new_temp(int depth) {
    LocInfo info;
    info.kind = LocKind::Var;
    info.owner = fs_->f->id;
    info.display = fs_->f->name + "::__t" + std::to_string(fs_->temp_counter++);
    info.name = "l:" + info.display;
    info.pointer_depth = depth;
    info.is_temp = true;
    LocId id = ir_.locs.intern(info);
    fs_->f->private_keys.push_back(id);
    return id;
  }

  /// Materialises an rvalue in a key, introducing a temporary when needed.
  LocId to_key(const RValue& rv, int depth, int line) {
    switch (rv.kind) {
      case RValue::Kind::Key: return rv.loc;
      case RValue::Kind::Addr: {
        LocId t = new_temp(depth);
        Node n = make_node(NodeKind::AddressOf);
        n.dst = t;
        n.src = rv.loc;
        emit(n);
        return t;
      }
      case RValue::Kind::Alloc: {
        LocId t = new_temp(depth);
        emit(alloc_node(t, rv, depth));
        return t;
      }
      case RValue::Kind::Scalar: break;
    }
    fail(line, "expected a pointer value");
  }

  Node alloc_node(LocId dst, const RValue& rv, int depth) {
    Node n = make_node(NodeKind::Alloc);
    n.dst = dst;
    n.alloc_line = rv.alloc_line;
    n.alloc_kind = rv.alloc_kind;
    n.alloc_cell_is_pointer = depth >= 2;
    n.src = heap_location(rv.alloc_line, depth - 1);
    return n;
  }

  RValue lower_alloc(const Expr& e) {
    for (const auto& k : e.kids) lower_rvalue(*k);
    RValue rv;
    rv.kind = RValue::Kind::Alloc;
    rv.alloc_line = e.line;
    rv.alloc_kind = e.name == "calloc" ? AllocKind::Calloc : e.name == "alloc" ? AllocKind::Alloc : AllocKind::Malloc;
    return rv;
  }

  LValue lower_lvalue(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Var: {
        const Symbol* s = lookup_var(e.name);
        if (!s) {
          if (lookup_function(e.name, e.line)) fail(e.line, "function '" + e.name + "' is not assignable");
          fail(e.line, "unknown identifier '" + e.name + "'");
        }
        return LValue{false, s->loc, s->type, false, {}};
      }
      case ExprKind::Member: {
        Type t = type_of(e);
        const Symbol* s = lookup_var(e.kid(0).name);
        return LValue{false, fields_.at({s->loc.value, e.name}).first, t, false, {}};
      }
      case ExprKind::Index: {
        Type t = type_of(e);
        const Symbol* s = lookup_var(e.kid(0).name);
        lower_rvalue(e.kid(1));
        return LValue{false, s->loc, t, false, {}};
      }
      case ExprKind::Deref: {
        Type t = type_of(e);
        const Expr& inner = e.kid(0);
        if (inner.kind == ExprKind::IntLit) {
          if (inner.value == 0) fail(e.line, "dereference of a null constant");
          LocId tmp = new_temp(1);
          Node n = make_node(NodeKind::AddressOf);
          n.dst = tmp;
          n.src = literal_location(inner.value);
          emit(n);
          return LValue{true, tmp, t, true, ast::to_string(e)};
        }
        Type it = type_of(inner);
        if (it.array_size) return lower_lvalue(inner);
        RValue rv = lower_rvalue(inner);
        return LValue{true, to_key(rv, decay(it).ptr, e.line), t, false, ast::to_string(e)};
      }
      default: fail(e.line, "expression is not assignable");
    }
  }

  /// Lowers `e` for its value. Pointer-typed results come back as Key/Addr/Alloc.
  RValue lower_rvalue(const Expr& e) {
    switch (e.kind) {
      case ExprKind::IntLit:
      case ExprKind::Null: {
        RValue rv;
        if (e.kind == ExprKind::Null || e.value == 0) {
          rv.kind = RValue::Kind::Addr;
          rv.loc = kNullLoc;
        }
        return rv;
      }
      case ExprKind::Binary:
        lower_rvalue(e.kid(0));
        lower_rvalue(e.kid(1));
        type_of(e);
        return RValue{};
      case ExprKind::Unary:
        lower_rvalue(e.kid(0));
        return RValue{};
      case ExprKind::Alloc: return lower_alloc(e);
      case ExprKind::Var: {
        if (const Symbol* s = lookup_var(e.name)) {
          if (s->type.array_size) return RValue{RValue::Kind::Addr, s->loc};
          if (s->type.is_struct_value()) fail(e.line, "struct values cannot be used as expressions");
          if (s->type.ptr > 0) return RValue{RValue::Kind::Key, s->loc};
          return RValue{};
        }
        if (auto f = lookup_function(e.name, e.line)) {
          ir_.functions[static_cast<std::size_t>(*f)].address_taken = true;
          return RValue{RValue::Kind::Addr, func_location(*f)};
        }
        fail(e.line, "unknown identifier '" + e.name + "'");
      }
      case ExprKind::AddrOf: {
        type_of(e);
        const Expr& inner = e.kid(0);
        if (inner.kind == ExprKind::Var && !lookup_var(inner.name)) {
          auto f = lookup_function(inner.name, inner.line);
          if (!f) fail(e.line, "unknown identifier '" + inner.name + "'");
          ir_.functions[static_cast<std::size_t>(*f)].address_taken = true;
          return RValue{RValue::Kind::Addr, func_location(*f)};
        }
        LValue lv = lower_lvalue(inner);
        if (lv.indirect) return RValue{RValue::Kind::Key, lv.loc};
        return RValue{RValue::Kind::Addr, lv.loc};
      }
      case ExprKind::Member:
      case ExprKind::Index: {
        Type t = type_of(e);
        LValue lv = lower_lvalue(e);
        if (t.ptr > 0 || t.base == Type::Base::Func) return RValue{RValue::Kind::Key, lv.loc};
        return RValue{};
      }
      case ExprKind::Deref: {
        Type t = type_of(e);
        const Expr& inner = e.kid(0);
        if (inner.kind != ExprKind::IntLit && type_of(inner).array_size) {
          // *arr reads the monolithic array location.
          LValue lv = lower_lvalue(inner);
          if (t.ptr > 0) return RValue{RValue::Kind::Key, lv.loc};
          return RValue{};
        }
        if (t.base == Type::Base::Func && t.ptr == 0) {
          // *fp designates the function; only meaningful as a callee.
          RValue rv = lower_rvalue(inner);
          return rv;
        }
        LValue lv = lower_lvalue(e);
        Node n = make_node(NodeKind::Load);
        n.src = lv.loc;
        if (t.ptr > 0) {
          LocId tmp = new_temp(t.ptr);
          n.dst = tmp;
          emit_poi(n, ast::to_string(e), lv.literal);
          return RValue{RValue::Kind::Key, tmp};
        }
        emit_poi(n, ast::to_string(e), lv.literal);
        return RValue{};
      }
      case ExprKind::Call: {
        Type t = type_of(e);
        if (t.ptr > 0) {
          LocId tmp = new_temp(t.ptr);
          lower_call(e, tmp);
          return RValue{RValue::Kind::Key, tmp};
        }
        lower_call(e, std::nullopt);
        return RValue{};
      }
    }
    fail(e.line, "unsupported expression");
  }

  /// Like lower_rvalue, but a non-zero integer literal denotes an address constant.
  RValue pointer_rvalue(const Expr& e) {
    if (e.kind == ExprKind::IntLit && e.value != 0) return RValue{RValue::Kind::Addr, literal_location(e.value)};
    return lower_rvalue(e);
  }

  std::string actual_source(const Expr& arg, const RValue& rv) const {
    if (rv.kind == RValue::Kind::Key && !ir_.locs[rv.loc].is_temp) return ir_.locs.name(rv.loc);
    if (rv.kind == RValue::Kind::Addr) return rv.loc == kNullLoc ? "null" : "&" + ir_.locs.name(rv.loc);
    return fs_->f->name + ":" + ast::to_string(arg);
  }

  void lower_call(const Expr& e, std::optional<LocId> ret_target) {
    const Expr& callee = e.kid(0);
    Node n = make_node(NodeKind::Call);
    std::string text;
    bool indirect = false;
    std::optional<FuncId> direct;
    if (callee.kind == ExprKind::Var) direct = lookup_function(callee.name, callee.line);
    if (!direct) {
      Type ct = type_of(callee);
      if (ct.base != Type::Base::Func) fail(e.line, "called object is not a function");
      const Expr* ptr_expr = &callee;
      if (ct.ptr == 0) {
        if (callee.kind != ExprKind::Deref) fail(e.line, "called object is not a function");
        ptr_expr = &callee.kid(0);
      }
      Type pt = type_of(*ptr_expr);
      if (pt.base != Type::Base::Func || pt.ptr != 1) fail(e.line, "called object is not a function pointer");
      RValue rv = lower_rvalue(*ptr_expr);
      if (rv.kind == RValue::Kind::Addr && ir_.locs[rv.loc].kind == LocKind::Func) {
        direct = ir_.locs[rv.loc].func;
      } else {
        n.callee_ptr = to_key(rv, 1, e.line);
        indirect = true;
        text = ast::to_string(callee) + "()";
      }
    }
    std::size_t nargs = e.kids.size() - 1;
    if (direct) {
      const ast::Function& fn = *defined_[static_cast<std::size_t>(*direct)];
      if (fn.params.size() != nargs)
        fail(e.line, "call to '" + fn.name + "' with " + std::to_string(nargs) + " argument(s), expected " +
                         std::to_string(fn.params.size()));
      n.callee = *direct;
    }
    for (std::size_t i = 1; i < e.kids.size(); ++i) {
      const Expr& arg = e.kid(i);
      Type at = decay(type_of(arg));
      if (at.base == Type::Base::Func && at.ptr == 0) at.ptr = 1;
      bool formal_ptr = true;
      if (direct) {
        const auto& p = defined_[static_cast<std::size_t>(*direct)]->params[i - 1].type;
        formal_ptr = p.ptr > 0;
        if (formal_ptr) {
          check_assignable(p, arg, e.line);
        } else if (pointer_like(at)) {
          fail(e.line, "passing a pointer to a non-pointer parameter");
        }
      } else {
        formal_ptr = pointer_like(at) || arg.kind == ExprKind::Null;
      }
      Actual a;
      RValue rv = formal_ptr ? pointer_rvalue(arg) : lower_rvalue(arg);
      if (formal_ptr && rv.kind != RValue::Kind::Scalar) {
        if (rv.kind == RValue::Kind::Alloc) {
          rv = RValue{RValue::Kind::Key, to_key(rv, std::max(1, at.ptr), e.line)};
        }
        a.kind = rv.kind == RValue::Kind::Key ? Actual::Kind::Key : Actual::Kind::Addr;
        a.loc = rv.loc;
        a.source = actual_source(arg, rv);
      } else {
        a.kind = Actual::Kind::Scalar;
        a.source = fs_->f->name + ":" + ast::to_string(arg);
      }
      n.actuals.push_back(std::move(a));
    }
    n.ret_target = ret_target;
    NodeId id = indirect ? emit_poi(n, text) : emit(n);
    if (direct) ir_.pcg_edges.push_back(PcgEdge{fs_->f->id, id, *direct});
  }

  void lower_assign(const Expr& lhs, const Expr& rhs, int line) {
    if (lhs.kind == ExprKind::Var) {
      if (const Symbol* s = lookup_var(lhs.name)) {
        if (s->type.array_size) fail(line, "assignment to an array");
        if (s->type.is_struct_value()) fail(line, "struct assignment is not supported");
        if (s->type.is_const && s->type.ptr > 0) fail(line, "assignment to const pointer '" + lhs.name + "'");
      }
    }
    Type lt = type_of(lhs);
    if (lt.base == Type::Base::Func && lt.ptr == 0) fail(line, "assignment to a function");
    LValue lv = lower_lvalue(lhs);
    lower_assign_to(lv, rhs, line);
  }

  void lower_assign_to(const LValue& lv, const Expr& rhs, int line) {
    check_assignable(lv.type, rhs, line);
    int depth = lv.type.ptr;
    if (depth == 0) {
      lower_rvalue(rhs);
      if (lv.indirect) {
        Node n = make_node(NodeKind::Store);
        n.dst = lv.loc;
        emit_poi(n, lv.text, lv.literal);
      }
      return;
    }
    if (lv.indirect) {
      RValue rv = pointer_rvalue(rhs);
      LocId q = to_key(rv, depth, line);
      Node n = make_node(NodeKind::Store);
      n.dst = lv.loc;
      n.src = q;
      emit_poi(n, lv.text, lv.literal);
      return;
    }
    LocId k = lv.loc;
    // Direct target: emit the canonical single node where possible.
    if (rhs.kind == ExprKind::Call) {
      lower_call(rhs, k);
      return;
    }
    if (rhs.kind == ExprKind::Alloc) {
      emit(alloc_node(k, lower_alloc(rhs), depth));
      return;
    }
    if (rhs.kind == ExprKind::Deref && rhs.kid(0).kind != ExprKind::IntLit && !type_of(rhs.kid(0)).array_size &&
        !(type_of(rhs).base == Type::Base::Func && type_of(rhs).ptr == 0)) {
      LValue src = lower_lvalue(rhs);
      Node n = make_node(NodeKind::Load);
      n.dst = k;
      n.src = src.loc;
      emit_poi(n, ast::to_string(rhs), src.literal);
      return;
    }
    RValue rv = pointer_rvalue(rhs);
    Node n = make_node(rv.kind == RValue::Kind::Key ? NodeKind::Copy : NodeKind::AddressOf);
    n.dst = k;
    if (rv.kind == RValue::Kind::Alloc) {
      emit(alloc_node(k, rv, depth));
      return;
    } else {
      n.src = rv.loc;
    }
    emit(n);
  }

  const ast::Program& prog_;
  std::string entry_name_;
  ProgramIR ir_;
  std::string cur_file_;
  std::map<std::string, const ast::StructDecl*> structs_;
  std::map<std::string, FuncId> function_ids_;
  std::set<std::string> declared_only_;
  std::vector<const ast::Function*> defined_;
  std::unordered_map<std::string, Symbol> globals_;
  std::map<std::pair<std::uint32_t, std::string>, std::pair<LocId, Type>> fields_;
  FunctionState* fs_ = nullptr;
};

}  // namespace detail

inline ProgramIR lower(const ast::Program& program, const std::string& entry = "main") {
  detail::Lowerer l(program, entry);
  return l.run();
}

/// Parses and lowers a whole source program.
inline ProgramIR build_ir(const SourceProgram& source) { return lower(parse(source), source.entry_name); }

inline ProgramIR build_ir_from_text(const std::string& text, const std::string& file = "input.mc",
                                    const std::string& entry = "main") {
  SourceProgram sp;
  sp.files.push_back({file, text});
  sp.entry_name = entry;
  return build_ir(sp);
}

}  // namespace ptwb
