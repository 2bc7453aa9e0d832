#pragma once

// Lowered program representation: a program call graph of functions, each
// with a CFG whose nodes are the four pointer assignments, heap allocations,
// calls and opaque branches.

#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ptwb/ast.hpp"
#include "ptwb/memory_model.hpp"

namespace ptwb {

using NodeId = int;
inline constexpr NodeId kEntryNode = 0;
inline constexpr NodeId kExitNode = 1;

enum class NodeKind { Entry, Exit, AddressOf, Copy, Load, Store, Alloc, Call, Branch, Nop };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Entry: return "entry";
    case NodeKind::Exit: return "exit";
    case NodeKind::AddressOf: return "address-of";
    case NodeKind::Copy: return "copy";
    case NodeKind::Load: return "load";
    case NodeKind::Store: return "store";
    case NodeKind::Alloc: return "alloc";
    case NodeKind::Call: return "call";
    case NodeKind::Branch: return "branch";
    case NodeKind::Nop: return "nop";
  }
  return "?";
}

enum class AllocKind { Malloc, Calloc, Alloc };

/// One argument at a call site after lowering.
struct Actual {
  enum class Kind { Scalar, Key, Addr };
  Kind kind = Kind::Scalar;
  LocId loc;           // the key read (Key) or the address taken (Addr)
  std::string source;  // canonical spelling of the source expression
};

struct Node {
  NodeKind kind = NodeKind::Nop;
  // AddressOf: dst = &src.  Copy: dst = src.  Load: dst = *src (dst empty for a
  // scalar read).  Store: *dst = src (src empty for a scalar write).  Alloc: dst.
  std::optional<LocId> dst;
  std::optional<LocId> src;

  // Alloc
  int alloc_line = 0;
  AllocKind alloc_kind = AllocKind::Malloc;
  bool alloc_cell_is_pointer = false;

  // Call
  std::optional<FuncId> callee;      // direct call
  std::optional<LocId> callee_ptr;   // call through a function pointer
  std::vector<Actual> actuals;
  std::optional<LocId> ret_target;

  // Branch
  bool loop_header = false;  // successor 0 enters the loop body

  // Source position of the statement that produced the node.
  int file = 0;
  int line = 0;
  int col = 0;
  int poi_level = 0;  // > 0 for dereference points, 1-based within the statement
  bool literal_address = false;
  std::string text;   // dereference expression, for reports

  bool is_poi() const { return poi_level > 0; }
  /// The pointer dereferenced at this node, for dereference points.
  std::optional<LocId> deref_pointer() const {
    switch (kind) {
      case NodeKind::Load: return src;
      case NodeKind::Store: return dst;
      case NodeKind::Call: return callee_ptr;
      default: return std::nullopt;
    }
  }
};

inline Node make_node(NodeKind kind) {
  Node n;
  n.kind = kind;
  return n;
}

struct FunctionIR {
  FuncId id = 0;
  std::string name;
  int file = 0;
  int line = 0;
  std::vector<LocId> params;  // every formal, scalar ones included
  std::optional<LocId> ret_slot;
  std::vector<LocId> uninit_locals;  // pointer keys seeded {unknown} on entry
  std::vector<LocId> private_keys;   // all locals, formals, temporaries, slot
  bool address_taken = false;
  std::vector<Node> nodes;
  std::vector<std::vector<NodeId>> succ;
  std::vector<std::vector<NodeId>> pred;

  std::size_t size() const { return nodes.size(); }
  const Node& node(NodeId n) const { return nodes.at(static_cast<std::size_t>(n)); }
};

struct GlobalDecl {
  LocId var;
  int pointer_depth = 0;
  bool is_const_pointer = false;
  std::optional<LocId> initializer;  // address taken by the initializer (null for "= 0")
  int file = 0;
  int line = 0;
};

struct PcgEdge {
  FuncId caller;
  NodeId call;
  FuncId callee;
  auto operator<=>(const PcgEdge&) const = default;
};

enum class PoIKind { Load, Store, IndirectCall };

struct PoISite {
  FuncId function = 0;
  NodeId node = 0;
  LocId pointer;
  PoIKind kind = PoIKind::Load;
  int level = 1;
  std::string file;
  int line = 0;
  int col = 0;
  std::string text;
  bool literal_address = false;
};

struct ProgramIR {
  LocationTable locs;
  std::vector<FunctionIR> functions;
  FuncId entry = 0;
  std::vector<GlobalDecl> globals;
  std::vector<PcgEdge> pcg_edges;  // direct calls only
  std::vector<std::string> files;

  const FunctionIR& function(FuncId f) const { return functions.at(static_cast<std::size_t>(f)); }
  std::optional<FuncId> find_function(const std::string& name) const {
    for (const auto& f : functions)
      if (f.name == name) return f.id;
    return std::nullopt;
  }
};

/// One point of interest per dereference level, ordered by (file, line, column, level).
inline std::vector<PoISite> enumerate_pois(const ProgramIR& ir) {
  std::vector<PoISite> out;
  for (const FunctionIR& f : ir.functions) {
    for (NodeId n = 0; n < static_cast<NodeId>(f.size()); ++n) {
      const Node& node = f.node(n);
      if (!node.is_poi()) continue;
      PoISite s;
      s.function = f.id;
      s.node = n;
      s.pointer = *node.deref_pointer();
      s.kind = node.kind == NodeKind::Load    ? PoIKind::Load
               : node.kind == NodeKind::Store ? PoIKind::Store
                                              : PoIKind::IndirectCall;
      s.level = node.poi_level;
      s.file = ir.files.at(static_cast<std::size_t>(node.file));
      s.line = node.line;
      s.col = node.col;
      s.text = node.text;
      s.literal_address = node.literal_address;
      out.push_back(std::move(s));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PoISite& a, const PoISite& b) {
    return std::tie(a.file, a.line, a.col, a.level, a.function, a.node) <
           std::tie(b.file, b.line, b.col, b.level, b.function, b.node);
  });
  return out;
}

}  // namespace ptwb
