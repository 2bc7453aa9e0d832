#pragma once

// Pieces shared by the three engines: initial values, call targets and
// diagnostics.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"

namespace ptwb {

struct Diagnostic {
  std::string kind;  // "null-deref", "unknown-deref", "unresolvable-call", ...
  std::string file;
  int line = 0;
  std::string message;

  auto operator<=>(const Diagnostic&) const = default;
};

inline void sort_unique(std::vector<Diagnostic>& d) {
  std::sort(d.begin(), d.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return std::tie(a.file, a.line, a.kind, a.message) < std::tie(b.file, b.line, b.kind, b.message);
  });
  d.erase(std::unique(d.begin(), d.end()), d.end());
}

struct Budget {
  long long max_iterations = 1'000'000;
  long long max_contexts = 10'000;
};

/// Uninitialized globals hold null; initialized ones hold their initializer.
inline PointsToMap default_init(const ProgramIR& ir) {
  PointsToMap m;
  for (const GlobalDecl& g : ir.globals) {
    LocSet s;
    s.insert(g.initializer ? *g.initializer : kNullLoc);
    m.join(g.var, s);
  }
  return m;
}

/// Boundary of the entry function: globals plus {unknown} for its formals.
inline PointsToMap entry_boundary(const ProgramIR& ir) {
  PointsToMap m = default_init(ir);
  LocSet unk;
  unk.insert(kUnknownLoc);
  for (LocId p : ir.function(ir.entry).params)
    if (ir.locs[p].pointer_depth > 0) m.join(p, unk);
  return m;
}

/// Value a fresh allocation cell holds, if the cell stores pointers.
inline std::optional<LocId> alloc_cell_seed(const Node& n) {
  if (!n.alloc_cell_is_pointer) return std::nullopt;
  return n.alloc_kind == AllocKind::Calloc ? kNullLoc : kUnknownLoc;
}

inline LocId alloc_heap_loc(const ProgramIR& ir, const Node& n) {
  return *ir.locs.find("heap:" + std::to_string(n.alloc_line));
}

/// Targets of indirect call sites, keyed by (function, node).
using CallSite = std::pair<FuncId, NodeId>;
using IndirectTargets = std::map<CallSite, std::vector<FuncId>>;

inline std::vector<FuncId> callees_of(const Node& n, FuncId f, NodeId id, const IndirectTargets& targets) {
  if (n.callee) return {*n.callee};
  if (auto it = targets.find({f, id}); it != targets.end()) return it->second;
  return {};
}

/// Functions reachable from the entry through direct and resolved indirect calls,
/// in reverse post-order of the call graph.
inline std::vector<FuncId> reachable_functions(const ProgramIR& ir, const IndirectTargets& targets) {
  std::vector<FuncId> post;
  std::vector<char> seen(ir.functions.size(), 0);
  auto visit = [&](auto&& self, FuncId f) -> void {
    seen[static_cast<std::size_t>(f)] = 1;
    const FunctionIR& fn = ir.function(f);
    for (NodeId n = 0; n < static_cast<NodeId>(fn.size()); ++n) {
      if (fn.node(n).kind != NodeKind::Call) continue;
      for (FuncId g : callees_of(fn.node(n), f, n, targets))
        if (!seen[static_cast<std::size_t>(g)]) self(self, g);
    }
    post.push_back(f);
  };
  visit(visit, ir.entry);
  std::reverse(post.begin(), post.end());
  return post;
}

/// Pairs (actual, formal) for the pointer arguments of a call.
struct Binding {
  LocId formal;
  const Actual* actual;
};

inline std::vector<Binding> bindings(const ProgramIR& ir, const Node& call, FuncId callee) {
  std::vector<Binding> out;
  const FunctionIR& g = ir.function(callee);
  std::size_t n = std::min(g.params.size(), call.actuals.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (ir.locs[g.params[i]].pointer_depth == 0) continue;
    if (call.actuals[i].kind == Actual::Kind::Scalar) continue;
    out.push_back(Binding{g.params[i], &call.actuals[i]});
  }
  return out;
}

/// Value of an actual in state `in`.
inline LocSet actual_value(const Actual& a, const PointsToMap& in) {
  if (a.kind == Actual::Kind::Key) return in.get(a.loc);
  LocSet s;
  s.insert(a.loc);
  return s;
}

/// Records null or unknown pointees of a dereferenced operand.
inline void check_deref(const ProgramIR& ir, const FunctionIR& f, const Node& n, const LocSet& pointees,
                        std::vector<Diagnostic>& out) {
  if (pointees.contains(kNullLoc))
    out.push_back({"null-deref", ir.files.at(static_cast<std::size_t>(n.file)), n.line,
                   "possible null dereference in " + f.name});
  if (pointees.contains(kUnknownLoc))
    out.push_back({"unknown-deref", ir.files.at(static_cast<std::size_t>(n.file)), n.line,
                   "possible dereference of an uninitialized pointer in " + f.name});
}

}  // namespace ptwb
