#pragma once

// GEN/KILL transfer functions of the pointer statements, shared by the
// flow-sensitive and context-sensitive engines.

#include <set>
#include <vector>

#include "ptwb/analysis_common.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"

namespace ptwb {

/// Decides whether a write to a key may kill its old value.  Heap and array
/// cells never can; locals of recursive functions whose address escapes
/// can't either, since one name covers several live activations.
struct UpdatePolicy {
  const LocationTable* locs = nullptr;
  std::vector<char> summary_local;  // indexed by LocId::value

  bool weak(LocId k) const {
    if (locs->is_summary(k)) return true;
    return k.value < summary_local.size() && summary_local[k.value];
  }
};

inline UpdatePolicy default_policy(const LocationTable& locs) { return UpdatePolicy{&locs, {}}; }

struct GenKill {
  std::vector<LocId> kill;
  PointsToMap gen;
};

/// GEN and KILL of a non-call node.  Call, entry, exit, branch and nop nodes
/// have neither.
inline GenKill gen_kill(const ProgramIR& ir, const Node& n, const PointsToMap& in, const UpdatePolicy& pol) {
  GenKill r;
  auto assign = [&](LocId p, const LocSet& v) {
    if (!pol.weak(p)) r.kill.push_back(p);
    r.gen.join(p, v);
  };
  switch (n.kind) {
    case NodeKind::AddressOf: {
      LocSet s;
      s.insert(*n.src);
      assign(*n.dst, s);
      break;
    }
    case NodeKind::Copy: assign(*n.dst, in.get(*n.src)); break;
    case NodeKind::Load: {
      if (!n.dst) break;
      LocSet v;
      for (LocId x : in.get(*n.src))
        if (ir.locs.is_key(x)) v.union_with(in.get(x));
      assign(*n.dst, v);
      break;
    }
    case NodeKind::Store: {
      if (!n.src) break;
      const LocSet& pointees = in.get(*n.dst);
      std::vector<LocId> targets;
      for (LocId x : pointees)
        if (ir.locs.is_key(x)) targets.push_back(x);
      if (pointees.size() == 1 && targets.size() == 1 && !pol.weak(targets[0])) r.kill.push_back(targets[0]);
      const LocSet& v = in.get(*n.src);
      for (LocId x : targets) r.gen.join(x, v);
      break;
    }
    case NodeKind::Alloc: {
      LocId h = alloc_heap_loc(ir, n);
      LocSet s;
      s.insert(h);
      assign(*n.dst, s);
      if (auto seed = alloc_cell_seed(n)) {
        LocSet c;
        c.insert(*seed);
        r.gen.join(h, c);
      }
      break;
    }
    default: break;
  }
  return r;
}

/// OUT = GEN u (IN - KILL).
inline PointsToMap apply_gen_kill(const GenKill& gk, PointsToMap in) {
  for (LocId k : gk.kill) in.erase(k);
  in.join_all(gk.gen);
  return in;
}

inline PointsToMap transfer(const ProgramIR& ir, const Node& n, const PointsToMap& in, const UpdatePolicy& pol) {
  return apply_gen_kill(gen_kill(ir, n, in, pol), in);
}

inline PointsToMap transfer(const ProgramIR& ir, const Node& n, const PointsToMap& in) {
  return transfer(ir, n, in, default_policy(ir.locs));
}

/// Entry of a function: uninitialized locals start as {unknown}.
inline PointsToMap seed_locals(const FunctionIR& f, PointsToMap in, const UpdatePolicy& pol) {
  LocSet unk;
  unk.insert(kUnknownLoc);
  for (LocId l : f.uninit_locals) {
    if (!pol.weak(l)) in.erase(l);
    in.join(l, unk);
  }
  return in;
}

/// Keys whose address is taken somewhere in the program.
inline std::set<LocId> address_taken_keys(const ProgramIR& ir) {
  std::set<LocId> out;
  for (const GlobalDecl& g : ir.globals)
    if (g.initializer) out.insert(*g.initializer);
  for (const FunctionIR& f : ir.functions)
    for (const Node& n : f.nodes) {
      if (n.kind == NodeKind::AddressOf) out.insert(*n.src);
      for (const Actual& a : n.actuals)
        if (a.kind == Actual::Kind::Addr) out.insert(a.loc);
    }
  return out;
}

/// Functions on a call-graph cycle (self loops included).
inline std::vector<char> recursive_functions(const ProgramIR& ir, const IndirectTargets& targets) {
  std::size_t n = ir.functions.size();
  std::vector<std::vector<FuncId>> succ(n);
  for (const FunctionIR& f : ir.functions)
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id)
      if (f.node(id).kind == NodeKind::Call)
        for (FuncId g : callees_of(f.node(id), f.id, id, targets)) succ[static_cast<std::size_t>(f.id)].push_back(g);
  std::vector<char> rec(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    // s is recursive iff s reaches itself
    std::vector<char> seen(n, 0);
    std::vector<FuncId> stack(succ[s].begin(), succ[s].end());
    while (!stack.empty()) {
      FuncId g = stack.back();
      stack.pop_back();
      if (static_cast<std::size_t>(g) == s) {
        rec[s] = 1;
        break;
      }
      if (seen[static_cast<std::size_t>(g)]) continue;
      seen[static_cast<std::size_t>(g)] = 1;
      for (FuncId h : succ[static_cast<std::size_t>(g)]) stack.push_back(h);
    }
  }
  return rec;
}

inline UpdatePolicy make_policy(const ProgramIR& ir, const IndirectTargets& targets) {
  UpdatePolicy pol = default_policy(ir.locs);
  pol.summary_local.assign(ir.locs.size(), 0);
  std::vector<char> rec = recursive_functions(ir, targets);
  for (LocId k : address_taken_keys(ir)) {
    FuncId owner = ir.locs[k].owner;
    if (owner != kNoFunction && rec[static_cast<std::size_t>(owner)]) pol.summary_local[k.value] = 1;
  }
  return pol;
}

/// Private keys of `f` that are restored when an activation of `f` returns.
inline bool held_private(const ProgramIR& ir, LocId k, FuncId f, const UpdatePolicy& pol) {
  return ir.locs.is_private_to(k, f) && !pol.weak(k);
}

}  // namespace ptwb
