#pragma once

#include <ostream>
#include <string>

#include "ptwb/ir.hpp"

namespace ptwb {

inline std::string describe(const ProgramIR& ir, const Node& n) {
  const auto& L = ir.locs;
  auto nm = [&](const std::optional<LocId>& id) { return id ? L[*id].display : std::string("_"); };
  switch (n.kind) {
    case NodeKind::AddressOf: return nm(n.dst) + " = &" + nm(n.src);
    case NodeKind::Copy: return nm(n.dst) + " = " + nm(n.src);
    case NodeKind::Load: return nm(n.dst) + " = *" + nm(n.src);
    case NodeKind::Store: return "*" + nm(n.dst) + " = " + nm(n.src);
    case NodeKind::Alloc: return nm(n.dst) + " = alloc@" + std::to_string(n.alloc_line);
    case NodeKind::Call: {
      std::string out = n.ret_target ? nm(n.ret_target) + " = " : "";
      out += n.callee ? ir.function(*n.callee).name : "(*" + nm(n.callee_ptr) + ")";
      out += "(";
      for (std::size_t i = 0; i < n.actuals.size(); ++i) {
        if (i) out += ", ";
        const Actual& a = n.actuals[i];
        out += a.kind == Actual::Kind::Scalar ? "#" : a.kind == Actual::Kind::Addr ? "&" + L[a.loc].display
                                                                                   : L[a.loc].display;
      }
      return out + ")";
    }
    case NodeKind::Branch: return n.loop_header ? "branch (loop)" : "branch";
    default: return to_string(n.kind);
  }
}

inline void print_ir(std::ostream& os, const ProgramIR& ir) {
  for (const FunctionIR& f : ir.functions) {
    os << "function " << f.name << (f.id == ir.entry ? " (entry)" : "") << "\n";
    for (NodeId n = 0; n < static_cast<NodeId>(f.size()); ++n) {
      const Node& node = f.node(n);
      os << "  " << n << ": " << describe(ir, node) << "  [line " << node.line << "]";
      if (node.is_poi()) os << "  poi#" << node.poi_level;
      os << "  ->";
      for (NodeId s : f.succ[static_cast<std::size_t>(n)]) os << " " << s;
      os << "\n";
    }
  }
}

}  // namespace ptwb
