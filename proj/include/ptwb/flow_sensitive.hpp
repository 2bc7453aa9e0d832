#pragma once

// Flow-sensitive, context-insensitive analysis: per-node IN/OUT values inside
// each function, GEN/KILL summaries applied at call sites, and one merged
// boundary value per function.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ptwb/analysis_common.hpp"
#include "ptwb/andersen.hpp"
#include "ptwb/error.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"
#include "ptwb/transfer.hpp"

namespace ptwb {

struct FunctionSummary {
  PointsToMap gen;       // exit bindings of the keys the function may modify
  std::set<LocId> kill;  // keys overwritten on every path to the exit
  std::set<LocId> mod;
  LocSet ret;            // value of the return slot at exit

  bool operator==(const FunctionSummary&) const = default;
};

/// Applies a summary to the caller's value at a call site.
inline PointsToMap apply_summary(const FunctionSummary& s, PointsToMap in) {
  for (LocId k : s.kill) in.erase(k);
  in.join_all(s.gen);
  return in;
}

inline PointsToMap apply_summary(const FunctionSummary& s, const Node& call, const PointsToMap& in,
                                 const UpdatePolicy& pol) {
  PointsToMap out = apply_summary(s, in);
  if (call.ret_target) {
    if (!pol.weak(*call.ret_target)) out.erase(*call.ret_target);
    out.join(*call.ret_target, s.ret);
  }
  return out;
}

struct FunctionFacts {
  std::vector<FlowValue> in;
  std::vector<FlowValue> out;
  bool operator==(const FunctionFacts&) const = default;
};

using SummaryTable = std::vector<std::optional<FunctionSummary>>;

/// Counts node visits against the iteration budget.
struct VisitCounter {
  long long visits = 0;
  long long limit = 0;
  const char* engine = "fs";
  void tick() {
    if (++visits > limit)
      throw BudgetExceeded(std::string(engine) + ": iteration budget of " + std::to_string(limit) + " exceeded");
  }
};

/// The callee-independent part of a call: every target's summary, met.  A
/// target without a summary yet contributes nothing (Top).
inline FlowValue fs_call_out(const FunctionIR& f, NodeId id, const PointsToMap& in,
                             const SummaryTable& sums, const IndirectTargets& targets, const UpdatePolicy& pol) {
  const Node& n = f.node(id);
  std::vector<FuncId> callees = callees_of(n, f.id, id, targets);
  if (callees.empty()) return in;
  FlowValue out;
  for (FuncId g : callees) {
    const auto& s = sums[static_cast<std::size_t>(g)];
    if (s) out = meet(out, apply_summary(*s, n, in, pol));
  }
  return out;
}

/// Intraprocedural fixpoint of one function under `boundary`; `call_out`
/// maps the IN of a call node to its OUT.
template <class CallOut>
FunctionFacts solve_function(const ProgramIR& ir, const FunctionIR& f, const PointsToMap& boundary,
                             const UpdatePolicy& pol, VisitCounter& counter, CallOut&& call_out) {
  FunctionFacts facts;
  facts.in.assign(f.size(), std::nullopt);
  facts.out.assign(f.size(), std::nullopt);
  std::vector<char> queued(f.size(), 0);
  std::vector<NodeId> work{kEntryNode};
  queued[kEntryNode] = 1;
  // pop lowest id first so straight-line code settles in one pass
  auto pop = [&]() {
    auto it = std::min_element(work.begin(), work.end());
    NodeId n = *it;
    work.erase(it);
    queued[static_cast<std::size_t>(n)] = 0;
    return n;
  };
  while (!work.empty()) {
    counter.tick();
    NodeId id = pop();
    auto idx = static_cast<std::size_t>(id);
    FlowValue in;
    if (id == kEntryNode) {
      in = boundary;
    } else {
      for (NodeId p : f.pred[idx]) in = meet(in, facts.out[static_cast<std::size_t>(p)]);
    }
    facts.in[idx] = in;
    FlowValue out;
    if (in) {
      const Node& n = f.node(id);
      if (n.kind == NodeKind::Entry)
        out = seed_locals(f, *in, pol);
      else if (n.kind == NodeKind::Call)
        out = call_out(id, *in);
      else
        out = transfer(ir, n, *in, pol);
    }
    if (out == facts.out[idx]) continue;
    facts.out[idx] = std::move(out);
    for (NodeId s : f.succ[idx])
      if (!queued[static_cast<std::size_t>(s)]) {
        queued[static_cast<std::size_t>(s)] = 1;
        work.push_back(s);
      }
  }
  return facts;
}

inline FunctionFacts analyze_function(const ProgramIR& ir, const FunctionIR& f, const PointsToMap& boundary,
                                      const SummaryTable& sums, const IndirectTargets& targets,
                                      const UpdatePolicy& pol, VisitCounter& counter) {
  return solve_function(ir, f, boundary, pol, counter, [&](NodeId id, const PointsToMap& in) {
    return fs_call_out(f, id, in, sums, targets, pol);
  });
}

/// Keys a node may write, given its IN value.
inline void written_keys(const ProgramIR& ir, const FunctionIR& f, NodeId id, const PointsToMap& in,
                         const SummaryTable& sums, const IndirectTargets& targets, std::set<LocId>& out) {
  const Node& n = f.node(id);
  switch (n.kind) {
    case NodeKind::AddressOf:
    case NodeKind::Copy:
      out.insert(*n.dst);
      break;
    case NodeKind::Load:
      if (n.dst) out.insert(*n.dst);
      break;
    case NodeKind::Alloc:
      out.insert(*n.dst);
      out.insert(alloc_heap_loc(ir, n));
      break;
    case NodeKind::Store:
      if (n.src)
        for (LocId x : in.get(*n.dst))
          if (ir.locs.is_key(x)) out.insert(x);
      break;
    case NodeKind::Call:
      if (n.ret_target) out.insert(*n.ret_target);
      for (FuncId g : callees_of(n, f.id, id, targets))
        if (const auto& s = sums[static_cast<std::size_t>(g)]) out.insert(s->mod.begin(), s->mod.end());
      break;
    default: break;
  }
}

/// Keys a node overwrites on every execution (strong updates only).
inline std::set<LocId> killed_keys(const ProgramIR& ir, const FunctionIR& f, NodeId id, const PointsToMap& in,
                                   const SummaryTable& sums, const IndirectTargets& targets,
                                   const UpdatePolicy& pol) {
  const Node& n = f.node(id);
  std::set<LocId> out;
  if (n.kind == NodeKind::Call) {
    std::optional<std::set<LocId>> common;
    for (FuncId g : callees_of(n, f.id, id, targets)) {
      const auto& s = sums[static_cast<std::size_t>(g)];
      if (!s) continue;
      if (!common) {
        common = s->kill;
      } else {
        std::set<LocId> keep;
        for (LocId k : *common)
          if (s->kill.count(k)) keep.insert(k);
        common = std::move(keep);
      }
    }
    if (common) out = std::move(*common);
    if (n.ret_target && !pol.weak(*n.ret_target)) out.insert(*n.ret_target);
    return out;
  }
  for (LocId k : gen_kill(ir, n, in, pol).kill) out.insert(k);
  return out;
}

/// Builds the summary of `f` from its final facts.
inline std::optional<FunctionSummary> summarize(const ProgramIR& ir, const FunctionIR& f, const FunctionFacts& facts,
                                                const SummaryTable& sums, const IndirectTargets& targets,
                                                const UpdatePolicy& pol) {
  const FlowValue& exit = facts.in[kExitNode];
  if (!exit) return std::nullopt;

  std::set<LocId> mod;
  for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id)
    if (const auto& in = facts.in[static_cast<std::size_t>(id)]) written_keys(ir, f, id, *in, sums, targets, mod);
  // weak locals keep their {unknown} seed past the call, as in the CS engine
  for (LocId k : f.uninit_locals)
    if (pol.weak(k)) mod.insert(k);

  // must-kill: forward, intersection at joins, nullopt = everything
  using Must = std::optional<std::set<LocId>>;
  std::vector<Must> kin(f.size()), kout(f.size());
  std::vector<char> reached(f.size(), 0);
  for (std::size_t i = 0; i < f.size(); ++i) reached[i] = facts.in[i] && facts.out[i];
  bool changed = true;
  auto meet_must = [](const Must& a, const Must& b) -> Must {
    if (!a) return b;
    if (!b) return a;
    std::set<LocId> r;
    for (LocId k : *a)
      if (b->count(k)) r.insert(k);
    return r;
  };
  while (changed) {
    changed = false;
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
      auto idx = static_cast<std::size_t>(id);
      if (!facts.in[idx]) continue;
      Must in;
      if (id == kEntryNode) {
        in = std::set<LocId>{};
      } else {
        for (NodeId p : f.pred[idx])
          if (reached[static_cast<std::size_t>(p)]) in = meet_must(in, kout[static_cast<std::size_t>(p)]);
      }
      Must out = in;
      if (out && reached[idx]) {
        auto k = killed_keys(ir, f, id, *facts.in[idx], sums, targets, pol);
        out->insert(k.begin(), k.end());
      }
      if (in != kin[idx] || out != kout[idx]) {
        kin[idx] = std::move(in);
        kout[idx] = std::move(out);
        changed = true;
      }
    }
  }

  FunctionSummary s;
  for (LocId k : mod)
    if (!held_private(ir, k, f.id, pol)) s.mod.insert(k);
  if (kin[kExitNode])
    for (LocId k : *kin[kExitNode])
      if (s.mod.count(k)) s.kill.insert(k);
  for (LocId k : s.mod)
    if (exit->has(k)) s.gen.set(k, exit->get(k));
  if (f.ret_slot) s.ret = exit->get(*f.ret_slot);
  return s;
}

/// Value passed to callee `g` at a call: the caller's state without the
/// callee's own activation, plus the formals bound to the actuals.
inline PointsToMap project_boundary(const ProgramIR& ir, const Node& call, FuncId g, const PointsToMap& in,
                                    const UpdatePolicy& pol) {
  std::vector<std::pair<LocId, LocSet>> formals;
  for (const Binding& b : bindings(ir, call, g)) formals.emplace_back(b.formal, actual_value(*b.actual, in));
  PointsToMap out;
  for (const auto& [k, v] : in)
    if (!held_private(ir, k, g, pol)) out.set(k, v);
  for (auto& [k, v] : formals) {
    if (!pol.weak(k)) out.erase(k);
    out.join(k, v);
  }
  return out;
}

struct FsResult {
  std::vector<FunctionFacts> facts;
  std::vector<FlowValue> boundary;
  SummaryTable summaries;
  std::vector<char> analyzed;
  IndirectTargets targets;
  UpdatePolicy policy;
  std::vector<Diagnostic> diagnostics;
  int rounds = 0;
  long long visits = 0;

  /// Value before node `n` of function `f`; Top when never reached.
  FlowValue in_at(FuncId f, NodeId n) const {
    const auto fi = static_cast<std::size_t>(f);
    if (!analyzed[fi]) return std::nullopt;
    return facts[fi].in[static_cast<std::size_t>(n)];
  }
};

inline FsResult run_fs(const ProgramIR& ir, const IndirectTargets& targets, const Budget& budget = {}) {
  std::size_t nf = ir.functions.size();
  FsResult r;
  r.targets = targets;
  r.policy = make_policy(ir, targets);
  r.facts.resize(nf);
  r.boundary.assign(nf, std::nullopt);
  r.summaries.assign(nf, std::nullopt);
  r.analyzed.assign(nf, 0);
  r.boundary[static_cast<std::size_t>(ir.entry)] = entry_boundary(ir);

  VisitCounter counter{0, budget.max_iterations, "fs"};
  std::vector<FuncId> order = reachable_functions(ir, targets);
  // a function is redone only when its boundary or a callee summary moved
  std::vector<std::vector<FuncId>> callers(nf);
  for (FuncId fid : order) {
    const FunctionIR& f = ir.function(fid);
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id)
      for (FuncId g : callees_of(f.node(id), fid, id, targets)) callers[static_cast<std::size_t>(g)].push_back(fid);
  }
  std::vector<char> dirty(nf, 1);
  bool changed = true;
  while (changed) {
    changed = false;
    ++r.rounds;
    for (FuncId fid : order) {
      auto fi = static_cast<std::size_t>(fid);
      const FunctionIR& f = ir.function(fid);
      if (!r.boundary[fi] || !dirty[fi]) continue;
      dirty[fi] = 0;
      FunctionFacts facts = analyze_function(ir, f, *r.boundary[fi], r.summaries, targets, r.policy, counter);
      r.analyzed[fi] = 1;
      r.facts[fi] = std::move(facts);
      auto sum = summarize(ir, f, r.facts[fi], r.summaries, targets, r.policy);
      if (sum != r.summaries[fi]) {
        r.summaries[fi] = std::move(sum);
        for (FuncId c : callers[fi]) dirty[static_cast<std::size_t>(c)] = 1;
        changed = true;
      }
      for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
        const Node& n = f.node(id);
        const FlowValue& in = r.facts[fi].in[static_cast<std::size_t>(id)];
        if (n.kind != NodeKind::Call || !in) continue;
        for (FuncId g : callees_of(n, fid, id, targets)) {
          auto& b = r.boundary[static_cast<std::size_t>(g)];
          FlowValue nb = meet(b, project_boundary(ir, n, g, *in, r.policy));
          if (nb != b) {
            b = std::move(nb);
            dirty[static_cast<std::size_t>(g)] = 1;
            changed = true;
          }
        }
      }
    }
  }
  r.visits = counter.visits;

  for (const FunctionIR& f : ir.functions) {
    if (!r.analyzed[static_cast<std::size_t>(f.id)]) continue;
    for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
      const Node& n = f.node(id);
      const FlowValue& in = r.facts[static_cast<std::size_t>(f.id)].in[static_cast<std::size_t>(id)];
      if (n.is_poi() && in) check_deref(ir, f, n, in->get(*n.deref_pointer()), r.diagnostics);
    }
  }
  sort_unique(r.diagnostics);
  return r;
}

inline FsResult run_fs(const ProgramIR& ir, const Budget& budget = {}) {
  return run_fs(ir, run_fis(ir, budget).targets, budget);
}

}  // namespace ptwb
