#pragma once

// Flow- and context-insensitive inclusion analysis over the whole program.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ptwb/analysis_common.hpp"
#include "ptwb/error.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"

namespace ptwb {

struct ComplexConstraint {
  enum class Kind { Load, Store };
  Kind kind = Kind::Load;
  LocId lhs;  // Load: lhs = *rhs.  Store: *lhs = rhs.
  LocId rhs;
  auto operator<=>(const ComplexConstraint&) const = default;
};

struct ConstraintGraph {
  std::set<LocId> ptr_nodes;
  PointsToMap ptd_sets;
  std::set<std::pair<LocId, LocId>> copy_edges;  // (from, to)
  std::vector<ComplexConstraint> complex;

  void add_node(LocId p) { ptr_nodes.insert(p); }
  void seed(LocId p, LocId a) {
    add_node(p);
    LocSet s;
    s.insert(a);
    ptd_sets.join(p, s);
  }
  void copy(LocId from, LocId to) {
    add_node(from);
    add_node(to);
    copy_edges.insert({from, to});
  }
};

inline ConstraintGraph collect_constraints(const ProgramIR& ir, const IndirectTargets& targets = {}) {
  ConstraintGraph g;
  for (const auto& [key, set] : default_init(ir))
    for (LocId l : set) g.seed(key, l);
  for (const auto& [key, set] : entry_boundary(ir))
    for (LocId l : set) g.seed(key, l);

  for (const FunctionIR& f : ir.functions) {
    for (LocId l : f.uninit_locals) g.seed(l, kUnknownLoc);
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
      const Node& n = f.node(id);
      switch (n.kind) {
        case NodeKind::AddressOf: g.seed(*n.dst, *n.src); break;
        case NodeKind::Copy: g.copy(*n.src, *n.dst); break;
        case NodeKind::Load:
          g.add_node(*n.src);
          if (n.dst) {
            g.add_node(*n.dst);
            g.complex.push_back({ComplexConstraint::Kind::Load, *n.dst, *n.src});
          }
          break;
        case NodeKind::Store:
          g.add_node(*n.dst);
          if (n.src) {
            g.add_node(*n.src);
            g.complex.push_back({ComplexConstraint::Kind::Store, *n.dst, *n.src});
          }
          break;
        case NodeKind::Alloc: {
          LocId h = alloc_heap_loc(ir, n);
          g.seed(*n.dst, h);
          if (auto v = alloc_cell_seed(n)) g.seed(h, *v);
          break;
        }
        case NodeKind::Call:
          if (n.callee_ptr) g.add_node(*n.callee_ptr);
          for (FuncId callee : callees_of(n, f.id, id, targets)) {
            for (const Binding& b : bindings(ir, n, callee)) {
              if (b.actual->kind == Actual::Kind::Key)
                g.copy(b.actual->loc, b.formal);
              else
                g.seed(b.formal, b.actual->loc);
            }
            const FunctionIR& c = ir.function(callee);
            if (n.ret_target && c.ret_slot) g.copy(*c.ret_slot, *n.ret_target);
          }
          break;
        default: break;
      }
    }
  }
  return g;
}

struct SolveOptions {
  long long max_iterations = 1'000'000;
  std::optional<unsigned> shuffle_seed;  // perturbs processing order (testing)
};

/// Worklist solver with difference propagation; dynamic copy edges are added
/// as load/store constraints fire.
inline PointsToMap solve(const ConstraintGraph& g, const LocationTable& locs, const SolveOptions& opt = {}) {
  std::size_t n = locs.size();
  auto ix = [](LocId l) { return static_cast<std::size_t>(l.value); };
  std::vector<std::vector<LocId>> full(n), delta(n), succ(n);  // full is in arrival order
  std::vector<std::vector<std::uint64_t>> member(n);            // bitsets, allocated on first use
  std::unordered_set<std::uint64_t> edges;
  auto edge_key = [](LocId a, LocId b) { return (std::uint64_t{a.value} << 32) | b.value; };
  std::vector<std::vector<LocId>> loads_from(n), stores_to(n);  // rhs -> lhs, lhs -> rhs
  for (const auto& c : g.complex) {
    if (c.kind == ComplexConstraint::Kind::Load)
      loads_from[ix(c.rhs)].push_back(c.lhs);
    else
      stores_to[ix(c.lhs)].push_back(c.rhs);
  }

  std::deque<LocId> work;
  std::vector<char> queued(n, 0);
  auto push = [&](LocId p) {
    if (!queued[ix(p)]) {
      queued[ix(p)] = 1;
      work.push_back(p);
    }
  };
  // adds `items` to p, remembering what was new
  // when items alias full[p] nothing is new, so the range stays valid
  auto add = [&](LocId p, const LocId* first, std::size_t count) {
    auto& bits = member[ix(p)];
    if (bits.empty()) bits.assign((n + 63) / 64, 0);
    bool grew = false;
    for (std::size_t i = 0; i < count; ++i) {
      LocId x = first[i];
      std::uint64_t& w = bits[ix(x) / 64];
      std::uint64_t m = std::uint64_t{1} << (ix(x) % 64);
      if (w & m) continue;
      w |= m;
      full[ix(p)].push_back(x);
      delta[ix(p)].push_back(x);
      grew = true;
    }
    if (grew) push(p);
  };
  auto add_edge = [&](LocId from, LocId to) {
    if (!edges.insert(edge_key(from, to)).second) return;
    succ[ix(from)].push_back(to);
    add(to, full[ix(from)].data(), full[ix(from)].size());
  };
  for (const auto& [from, to] : g.copy_edges)
    if (edges.insert(edge_key(from, to)).second) succ[ix(from)].push_back(to);

  std::vector<LocId> order;
  for (const auto& [p, v] : g.ptd_sets.bindings()) order.push_back(p);
  std::optional<std::mt19937> rng;
  if (opt.shuffle_seed) {
    rng.emplace(*opt.shuffle_seed);
    std::shuffle(order.begin(), order.end(), *rng);
  }
  for (LocId p : order) {
    const LocSet& v = g.ptd_sets.get(p);
    std::vector<LocId> items(v.begin(), v.end());
    add(p, items.data(), items.size());
  }

  long long iterations = 0;
  while (!work.empty()) {
    if (++iterations > opt.max_iterations)
      throw BudgetExceeded("fis: iteration budget of " + std::to_string(opt.max_iterations) + " exceeded");
    if (rng && work.size() > 1) {
      std::size_t i = std::uniform_int_distribution<std::size_t>(0, work.size() - 1)(*rng);
      std::swap(work[i], work.front());
    }
    LocId p = work.front();
    work.pop_front();
    queued[ix(p)] = 0;

    std::vector<LocId> d;
    d.swap(delta[ix(p)]);
    for (std::size_t i = 0; i < loads_from[ix(p)].size(); ++i)
      for (LocId x : d)
        if (locs.is_key(x)) add_edge(x, loads_from[ix(p)][i]);
    for (std::size_t i = 0; i < stores_to[ix(p)].size(); ++i)
      for (LocId x : d)
        if (locs.is_key(x)) add_edge(stores_to[ix(p)][i], x);
    // add_edge may grow succ[p]; new targets already got the full set
    std::size_t fixed = succ[ix(p)].size();
    for (std::size_t i = 0; i < fixed; ++i) add(succ[ix(p)][i], d.data(), d.size());
  }

  PointsToMap pts;
  for (std::size_t i = 0; i < n; ++i)
    if (!full[i].empty()) pts.set(LocId{static_cast<std::uint32_t>(i)}, LocSet(std::move(full[i])));
  return pts;
}

struct FisResult {
  PointsToMap pts;
  IndirectTargets targets;
  std::vector<Diagnostic> diagnostics;
  int rounds = 0;
};

/// Indirect-call targets implied by `pts`.
inline IndirectTargets indirect_targets(const ProgramIR& ir, const PointsToMap& pts) {
  IndirectTargets out;
  for (const FunctionIR& f : ir.functions)
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
      const Node& n = f.node(id);
      if (n.kind != NodeKind::Call || !n.callee_ptr) continue;
      std::vector<FuncId> t;
      for (LocId l : pts.get(*n.callee_ptr))
        if (ir.locs[l].kind == LocKind::Func) t.push_back(ir.locs[l].func);
      std::sort(t.begin(), t.end());
      out[{f.id, id}] = std::move(t);
    }
  return out;
}

/// Solves, then re-collects with the call edges the solution implies, until
/// the set of edges stops growing.
inline FisResult resolve_function_pointers(const ProgramIR& ir, const SolveOptions& opt = {}) {
  FisResult r;
  for (;;) {
    ++r.rounds;
    r.pts = solve(collect_constraints(ir, r.targets), ir.locs, opt);
    IndirectTargets next = indirect_targets(ir, r.pts);
    if (next == r.targets) break;
    r.targets = std::move(next);
  }
  for (const auto& [site, t] : r.targets) {
    if (!t.empty()) continue;
    const Node& n = ir.function(site.first).node(site.second);
    r.diagnostics.push_back({"unresolvable-call", ir.files.at(static_cast<std::size_t>(n.file)), n.line,
                             "unresolvable indirect call through " + ir.locs[*n.callee_ptr].display});
  }
  for (const FunctionIR& f : ir.functions)
    for (const Node& n : f.nodes)
      if (n.is_poi()) check_deref(ir, f, n, r.pts.get(*n.deref_pointer()), r.diagnostics);
  sort_unique(r.diagnostics);
  return r;
}

/// All call edges, direct and resolved.
inline std::vector<PcgEdge> call_edges(const ProgramIR& ir, const IndirectTargets& targets) {
  std::vector<PcgEdge> out = ir.pcg_edges;
  for (const auto& [site, t] : targets)
    for (FuncId g : t) out.push_back({site.first, site.second, g});
  std::sort(out.begin(), out.end());
  return out;
}

inline FisResult run_fis(const ProgramIR& ir, const Budget& b = {}) {
  SolveOptions opt;
  opt.max_iterations = b.max_iterations;
  return resolve_function_pointers(ir, opt);
}

}  // namespace ptwb
