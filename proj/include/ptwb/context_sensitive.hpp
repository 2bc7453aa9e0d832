#pragma once

// Flow- and context-sensitive analysis with value contexts: a function is
// analyzed once per distinct value reaching its entry, and call sites reuse
// the exit value memoized for that context.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptwb/analysis_common.hpp"
#include "ptwb/andersen.hpp"
#include "ptwb/error.hpp"
#include "ptwb/flow_sensitive.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"
#include "ptwb/transfer.hpp"

namespace ptwb {

using ContextId = int;

struct CalleeContext {
  FuncId function;
  ContextId context;
  auto operator<=>(const CalleeContext&) const = default;
};

struct ContextEntry {
  FuncId function = 0;
  PointsToMap value;
  FunctionFacts facts;
  FlowValue exit;  // memoized summary; Top while pending
  bool analyzed = false;
  bool live = false;
  std::map<NodeId, std::vector<CalleeContext>> calls;  // from the last analysis
};

/// Keys the callee can observe: globals, literal addresses, and whatever they
/// and the actuals point to, transitively.
inline std::set<LocId> reachable_keys(const ProgramIR& ir, const Node& call, FuncId g, const PointsToMap& in,
                                      const UpdatePolicy& pol, const std::vector<LocId>& roots) {
  std::set<LocId> seen;
  std::vector<LocId> work;
  auto add = [&](LocId k) {
    if (!ir.locs.is_key(k) || held_private(ir, k, g, pol)) return;
    if (seen.insert(k).second) work.push_back(k);
  };
  for (LocId r : roots) add(r);
  for (const Binding& b : bindings(ir, call, g))
    for (LocId x : actual_value(*b.actual, in)) add(x);
  while (!work.empty()) {
    LocId k = work.back();
    work.pop_back();
    for (LocId x : in.get(k)) add(x);
  }
  return seen;
}

/// Global keys and literal addresses: visible to every function.
inline std::vector<LocId> global_roots(const ProgramIR& ir) {
  std::vector<LocId> out;
  for (std::uint32_t i = 0; i < ir.locs.size(); ++i) {
    LocId id{i};
    const LocInfo& info = ir.locs[id];
    if (!ir.locs.is_key(id)) continue;
    if (info.kind == LocKind::Addr || (info.owner == kNoFunction && info.kind != LocKind::Heap)) out.push_back(id);
  }
  return out;
}

/// Context value for callee `g`: reachable part of IN plus the bound formals.
inline PointsToMap project_context(const ProgramIR& ir, const Node& call, FuncId g, const PointsToMap& in,
                                   const std::set<LocId>& reach, const UpdatePolicy& pol) {
  PointsToMap out;
  for (LocId k : reach)
    if (in.has(k)) out.set(k, in.get(k));
  for (const Binding& b : bindings(ir, call, g)) {
    if (!pol.weak(b.formal)) out.erase(b.formal);
    out.join(b.formal, actual_value(*b.actual, in));
  }
  return out;
}

/// OUT of a call given the callee context's exit value.
inline PointsToMap apply_context_exit(const ProgramIR& ir, const Node& call, FuncId g, const PointsToMap& in,
                                      const std::set<LocId>& reach, const PointsToMap& exit,
                                      const UpdatePolicy& pol) {
  PointsToMap out;
  for (const auto& [k, v] : in)
    if (held_private(ir, k, g, pol) || !reach.count(k)) out.set(k, v);
  for (const auto& [k, v] : exit) {
    if (held_private(ir, k, g, pol)) continue;
    if (reach.count(k))
      out.set(k, v);
    else
      out.join(k, v);
  }
  if (call.ret_target) {
    const FunctionIR& callee = ir.function(g);
    if (!pol.weak(*call.ret_target)) out.erase(*call.ret_target);
    if (callee.ret_slot) out.join(*call.ret_target, exit.get(*callee.ret_slot));
  }
  return out;
}

struct CsResult {
  std::vector<ContextEntry> contexts;
  IndirectTargets targets;
  UpdatePolicy policy;
  std::vector<Diagnostic> diagnostics;
  long long visits = 0;
  std::size_t created = 0;

  /// Live contexts of `f`, in creation order.
  std::vector<ContextId> contexts_of(FuncId f) const {
    std::vector<ContextId> out;
    for (ContextId c = 0; c < static_cast<ContextId>(contexts.size()); ++c)
      if (contexts[static_cast<std::size_t>(c)].live && contexts[static_cast<std::size_t>(c)].function == f)
        out.push_back(c);
    return out;
  }

  /// Per live context of the enclosing function: the value before node `n`
  /// (contexts where the node is never reached are skipped).
  std::vector<std::pair<ContextId, PointsToMap>> in_at(FuncId f, NodeId n) const {
    std::vector<std::pair<ContextId, PointsToMap>> out;
    for (ContextId c : contexts_of(f)) {
      const auto& v = contexts[static_cast<std::size_t>(c)].facts.in[static_cast<std::size_t>(n)];
      if (v) out.emplace_back(c, *v);
    }
    return out;
  }
};

inline CsResult run_cs(const ProgramIR& ir, const IndirectTargets& targets, const Budget& budget = {}) {
  CsResult r;
  r.targets = targets;
  r.policy = make_policy(ir, targets);
  const UpdatePolicy& pol = r.policy;
  const std::vector<LocId> roots = global_roots(ir);

  std::map<std::pair<FuncId, PointsToMap>, ContextId> index;
  std::map<ContextId, std::set<ContextId>> dependents;
  std::deque<ContextId> work;
  std::set<ContextId> queued;
  auto push = [&](ContextId c) {
    if (queued.insert(c).second) work.push_front(c);
  };
  auto find_or_create = [&](FuncId f, PointsToMap value) {
    auto key = std::make_pair(f, value);
    if (auto it = index.find(key); it != index.end()) return it->second;
    if (static_cast<long long>(r.contexts.size()) >= budget.max_contexts)
      throw BudgetExceeded("cs: context budget of " + std::to_string(budget.max_contexts) + " exceeded in '" +
                           ir.function(f).name + "'");
    ContextId id = static_cast<ContextId>(r.contexts.size());
    ContextEntry e;
    e.function = f;
    e.value = std::move(value);
    r.contexts.push_back(std::move(e));
    index.emplace(std::move(key), id);
    push(id);
    return id;
  };

  ContextId root = find_or_create(ir.entry, entry_boundary(ir));
  VisitCounter counter{0, budget.max_iterations, "cs"};
  // contexts that skipped call sites behind a pending call, and those to
  // re-solve creating every callee context
  std::set<ContextId> deferred, eager;
  for (;;) {
    if (work.empty()) {
      if (deferred.empty()) break;
      for (ContextId c : deferred) {
        eager.insert(c);
        push(c);
      }
      deferred.clear();
    }
    ContextId cid = work.front();
    work.pop_front();
    queued.erase(cid);
    FuncId fid = r.contexts[static_cast<std::size_t>(cid)].function;
    const FunctionIR& f = ir.function(fid);
    PointsToMap value = r.contexts[static_cast<std::size_t>(cid)].value;
    std::map<NodeId, std::vector<CalleeContext>> calls;
    // a call's OUT only grows during one solve, otherwise a loop around it
    // can flip between a memoized context and a fresh pending one forever
    std::map<NodeId, FlowValue> call_out;
    std::set<NodeId> incomplete;  // calls whose callee had no summary yet

    // During the solve only existing contexts are consulted; a callee context
    // is created from the call's final IN afterwards.  Creating one for every
    // intermediate IN floods recursive programs with short-lived contexts.
    FunctionFacts facts = solve_function(ir, f, value, pol, counter, [&](NodeId id, const PointsToMap& in) {
      const Node& n = f.node(id);
      std::vector<FuncId> callees = callees_of(n, fid, id, targets);
      if (callees.empty()) return FlowValue(in);
      FlowValue out;
      for (FuncId g : callees) {
        std::set<LocId> reach = reachable_keys(ir, n, g, in, pol, roots);
        auto it = index.find({g, project_context(ir, n, g, in, reach, pol)});
        if (it == index.end() || !r.contexts[static_cast<std::size_t>(it->second)].analyzed) incomplete.insert(id);
        if (it == index.end()) continue;
        dependents[it->second].insert(cid);
        const FlowValue& exit = r.contexts[static_cast<std::size_t>(it->second)].exit;
        if (exit) out = meet(out, apply_context_exit(ir, n, g, in, reach, *exit, pol));
      }
      FlowValue& acc = call_out[id];
      acc = meet(acc, out);
      return acc;
    });
    // a call downstream of an unfinished one mostly sees a partial IN
    std::vector<char> behind(f.size(), 0);
    if (!eager.erase(cid)) {
      std::vector<NodeId> stack(incomplete.begin(), incomplete.end());
      while (!stack.empty()) {
        NodeId x = stack.back();
        stack.pop_back();
        for (NodeId y : f.succ[static_cast<std::size_t>(x)])
          if (!behind[static_cast<std::size_t>(y)]) {
            behind[static_cast<std::size_t>(y)] = 1;
            stack.push_back(y);
          }
      }
    }
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
      const auto& in = facts.in[static_cast<std::size_t>(id)];
      const Node& n = f.node(id);
      if (n.kind != NodeKind::Call || !in) continue;
      if (behind[static_cast<std::size_t>(id)]) {
        deferred.insert(cid);
        continue;
      }
      for (FuncId g : callees_of(n, fid, id, targets)) {
        std::set<LocId> reach = reachable_keys(ir, n, g, *in, pol, roots);
        ContextId callee = find_or_create(g, project_context(ir, n, g, *in, reach, pol));
        dependents[callee].insert(cid);
        calls[id].push_back({g, callee});
      }
    }

    ContextEntry& e = r.contexts[static_cast<std::size_t>(cid)];
    // exits only grow; recomputing them from scratch can oscillate when a
    // recursive call switches to a fresh, still pending context
    FlowValue exit = meet(e.exit, facts.in[kExitNode]);
    e.facts = std::move(facts);
    e.calls = std::move(calls);
    e.analyzed = true;
    if (exit != e.exit) {
      e.exit = std::move(exit);
      for (ContextId d : dependents[cid]) push(d);
    }
  }
  r.visits = counter.visits;
  r.created = r.contexts.size();

  // contexts only seen with intermediate values are dropped
  std::vector<ContextId> stack{root};
  r.contexts[static_cast<std::size_t>(root)].live = true;
  while (!stack.empty()) {
    ContextId c = stack.back();
    stack.pop_back();
    for (const auto& [node, callees] : r.contexts[static_cast<std::size_t>(c)].calls) {
      if (!r.contexts[static_cast<std::size_t>(c)].facts.in[static_cast<std::size_t>(node)]) continue;
      for (const CalleeContext& cc : callees) {
        auto& target = r.contexts[static_cast<std::size_t>(cc.context)];
        if (!target.live) {
          target.live = true;
          stack.push_back(cc.context);
        }
      }
    }
  }

  for (const FunctionIR& f : ir.functions)
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
      const Node& n = f.node(id);
      if (!n.is_poi()) continue;
      for (const auto& [c, in] : r.in_at(f.id, id)) check_deref(ir, f, n, in.get(*n.deref_pointer()), r.diagnostics);
    }
  sort_unique(r.diagnostics);
  return r;
}

inline CsResult run_cs(const ProgramIR& ir, const Budget& budget = {}) {
  return run_cs(ir, run_fis(ir, budget).targets, budget);
}

/// Union over contexts; for reports only.
inline LocSet merge_poi_contexts(const std::vector<LocSet>& per_context) {
  LocSet out;
  for (const LocSet& s : per_context) out.union_with(s);
  return out;
}

}  // namespace ptwb
