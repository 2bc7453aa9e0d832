#pragma once

// Syntactic pre-scan: labels every dereference point with the code pattern
// of its pointer and recommends an analysis before any points-to run.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"
#include "ptwb/transfer.hpp"

namespace ptwb {

enum class Pattern { ConstPointer, FormalPointer, SingleAssigned, MultiAssigned, Other };

inline const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::ConstPointer: return "const-pointer";
    case Pattern::FormalPointer: return "formal-pointer";
    case Pattern::SingleAssigned: return "single-assigned";
    case Pattern::MultiAssigned: return "multi-assigned";
    case Pattern::Other: return "other";
  }
  return "?";
}

inline constexpr Pattern kAllPatterns[] = {Pattern::ConstPointer, Pattern::FormalPointer, Pattern::SingleAssigned,
                                           Pattern::MultiAssigned, Pattern::Other};

struct PatternLabel {
  Pattern pattern = Pattern::Other;
  bool uniform_actuals = false;       // formal pointers only
  bool reassigned_in_callee = false;  // formal pointers only
  int distinct_actuals = 0;           // formal pointers only
  bool operator==(const PatternLabel&) const = default;
};

enum class Analysis { FIS, FS, CS };

inline const char* to_string(Analysis a) {
  switch (a) {
    case Analysis::FIS: return "FIS";
    case Analysis::FS: return "FS";
    case Analysis::CS: return "CS";
  }
  return "?";
}

struct Recommendation {
  Analysis analysis = Analysis::FIS;
  std::vector<std::string> reasons;
};

namespace detail {

/// Is `to` reachable from the successors of `from` without passing a node in `blocked`?
inline bool reaches(const FunctionIR& f, NodeId from, NodeId to, const std::set<NodeId>& blocked) {
  std::vector<char> seen(f.size(), 0);
  std::vector<NodeId> stack(f.succ[static_cast<std::size_t>(from)].begin(),
                            f.succ[static_cast<std::size_t>(from)].end());
  while (!stack.empty()) {
    NodeId n = stack.back();
    stack.pop_back();
    if (n == to) return true;
    if (seen[static_cast<std::size_t>(n)] || blocked.count(n)) continue;
    seen[static_cast<std::size_t>(n)] = 1;
    for (NodeId s : f.succ[static_cast<std::size_t>(n)]) stack.push_back(s);
  }
  return false;
}

/// Does every path from the entry to `to` pass through `through`?
inline bool dominates(const FunctionIR& f, NodeId through, NodeId to) {
  if (through == to) return true;
  return !reaches(f, kEntryNode, to, {through});
}

struct DefSite {
  FuncId function;
  NodeId node;
};

class Scanner {
 public:
  explicit Scanner(const ProgramIR& ir) : ir_(ir), taken_(address_taken_keys(ir)) {
    for (const FunctionIR& f : ir.functions)
      for (NodeId id = 0; id < static_cast<NodeId>(f.size()); ++id) {
        const Node& n = f.node(id);
        for (LocId k : written(n)) defs_[k].push_back({f.id, id});
        if (n.kind == NodeKind::Call && n.callee_ptr) indirect_sites_.push_back({f.id, id});
      }
    for (const GlobalDecl& g : ir.globals)
      if (g.initializer && *g.initializer != kNullLoc) initialized_.insert(g.var);
  }

  PatternLabel label(const PoISite& site) const {
    PatternLabel l;
    LocId k = site.pointer;
    const LocInfo& info = ir_.locs[k];
    const FunctionIR& f = ir_.function(site.function);
    const auto& defs = defs_of(k);

    bool address_init = initialized_.count(k) ||
                        (defs.size() == 1 &&
                         ir_.function(defs[0].function).node(defs[0].node).kind == NodeKind::AddressOf);
    if (info.is_const && address_init) {
      l.pattern = Pattern::ConstPointer;
      return l;
    }
    if (info.is_formal && info.owner == site.function) {
      l.pattern = Pattern::FormalPointer;
      auto sources = actual_sources(site.function, k);
      l.distinct_actuals = static_cast<int>(sources.size());
      l.uniform_actuals = sources.size() <= 1;
      l.reassigned_in_callee = !defs.empty();
      return l;
    }
    if (info.is_temp || taken_.count(k)) return l;

    std::size_t count = defs.size() + initialized_.count(k);
    if (count == 1) {
      if (initialized_.count(k) ||
          (defs[0].function == site.function && dominates(f, defs[0].node, site.node))) {
        l.pattern = Pattern::SingleAssigned;
        return l;
      }
    }
    if (count >= 2 && !initialized_.count(k)) {
      std::set<NodeId> blocked;
      bool local = true;
      for (const DefSite& d : defs) {
        if (d.function != site.function) local = false;
        blocked.insert(d.node);
      }
      bool all = local;
      for (const DefSite& d : defs)
        if (all && !reaches(f, d.node, site.node, blocked)) all = false;
      if (all) l.pattern = Pattern::MultiAssigned;
    }
    return l;
  }

  /// True when some assignment of the PoI's pointer, or its value on entry,
  /// is overwritten on every path before the dereference.
  bool has_killing_def(const PoISite& site) const {
    LocId k = site.pointer;
    const LocInfo& info = ir_.locs[k];
    const FunctionIR& f = ir_.function(site.function);
    if (info.is_temp || taken_.count(k)) return true;
    const auto& defs = defs_of(k);
    bool global = info.owner == kNoFunction;
    // calls may reassign a global somewhere else
    std::set<NodeId> blocked;
    bool foreign = false;
    for (const DefSite& d : defs) {
      if (d.function == site.function)
        blocked.insert(d.node);
      else
        foreign = true;
    }
    if (global && foreign) return true;
    if (global && !defs.empty() && !initialized_.count(k)) return true;
    for (NodeId d : blocked)
      if (!reaches(f, d, site.node, blocked)) return true;
    // entry value: null or the initializer for globals, {unknown} for
    // uninitialized locals, the actuals for formals
    bool has_entry_value = global || info.is_formal ||
                           std::find(f.uninit_locals.begin(), f.uninit_locals.end(), k) != f.uninit_locals.end();
    if (has_entry_value && !blocked.empty() && !reaches(f, kEntryNode, site.node, blocked)) return true;
    return false;
  }

  /// Distinct source spellings passed for formal `k` of `g` across all call sites.
  std::set<std::string> actual_sources(FuncId g, LocId k) const {
    const FunctionIR& fn = ir_.function(g);
    std::size_t idx = static_cast<std::size_t>(std::find(fn.params.begin(), fn.params.end(), k) - fn.params.begin());
    std::set<std::string> out;
    auto add = [&](FuncId caller, NodeId node) {
      const Node& n = ir_.function(caller).node(node);
      if (idx < n.actuals.size()) out.insert(n.actuals[idx].source);
    };
    for (const PcgEdge& e : ir_.pcg_edges)
      if (e.callee == g) add(e.caller, e.call);
    if (fn.address_taken)
      for (const auto& [caller, node] : indirect_sites_)
        if (ir_.function(caller).node(node).actuals.size() == fn.params.size()) add(caller, node);
    return out;
  }

 private:
  static std::vector<LocId> written(const Node& n) {
    std::vector<LocId> out;
    switch (n.kind) {
      case NodeKind::AddressOf:
      case NodeKind::Copy:
      case NodeKind::Alloc:
        out.push_back(*n.dst);
        break;
      case NodeKind::Load:
        if (n.dst) out.push_back(*n.dst);
        break;
      case NodeKind::Call:
        if (n.ret_target) out.push_back(*n.ret_target);
        break;
      default: break;
    }
    return out;
  }

  const std::vector<DefSite>& defs_of(LocId k) const {
    static const std::vector<DefSite> kNone;
    auto it = defs_.find(k);
    return it == defs_.end() ? kNone : it->second;
  }

  const ProgramIR& ir_;
  std::set<LocId> taken_;
  std::map<LocId, std::vector<DefSite>> defs_;
  std::set<LocId> initialized_;
  std::vector<std::pair<FuncId, NodeId>> indirect_sites_;
};

}  // namespace detail

inline PatternLabel label_poi(const PoISite& site, const ProgramIR& ir) { return detail::Scanner(ir).label(site); }

inline std::vector<PatternLabel> label_all(const ProgramIR& ir, const std::vector<PoISite>& sites) {
  detail::Scanner scan(ir);
  std::vector<PatternLabel> out;
  out.reserve(sites.size());
  for (const PoISite& s : sites) out.push_back(scan.label(s));
  return out;
}

inline Recommendation recommend(const std::vector<PoISite>& sites, const std::vector<PatternLabel>& labels,
                                const ProgramIR& ir) {
  detail::Scanner scan(ir);
  Recommendation r;
  std::set<std::string> formals;
  auto short_name = [&](LocId k) {
    const std::string& d = ir.locs[k].display;
    auto cut = d.rfind("::");
    return cut == std::string::npos ? d : d.substr(cut + 2);
  };
  auto note = [&](LocId k, std::size_t n) {
    std::string msg = "formal " + short_name(k) + " receives " + std::to_string(n) + " distinct actuals";
    if (formals.insert(ir.locs[k].name).second) r.reasons.push_back(msg);
  };
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const PatternLabel& l = labels[i];
    if (l.pattern == Pattern::FormalPointer && !l.uniform_actuals)
      note(sites[i].pointer, static_cast<std::size_t>(l.distinct_actuals));
  }
  // formals never dereferenced in the callee still carry per-call values out through returns and stores
  for (const FunctionIR& f : ir.functions)
    for (LocId k : f.params) {
      if (ir.locs[k].pointer_depth == 0 || formals.count(ir.locs[k].name)) continue;
      auto sources = scan.actual_sources(f.id, k);
      if (sources.size() >= 2) note(k, sources.size());
    }
  if (!r.reasons.empty()) {
    r.analysis = Analysis::CS;
    return r;
  }
  int kills = 0;
  for (const PoISite& s : sites)
    if (scan.has_killing_def(s)) ++kills;
  if (kills > 0) {
    r.analysis = Analysis::FS;
    r.reasons.push_back(std::to_string(kills) + " dereference(s) follow a killing assignment");
    return r;
  }
  r.analysis = Analysis::FIS;
  r.reasons.push_back("no formal receives distinct actuals and no assignment is killed before a dereference");
  return r;
}

inline Recommendation recommend(const ProgramIR& ir) {
  auto sites = enumerate_pois(ir);
  return recommend(sites, label_all(ir, sites), ir);
}

}  // namespace ptwb
