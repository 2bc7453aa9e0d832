#pragma once

// Bounded concrete interpreter over the lowered program.  Every branch arm is
// explored, loops run at most k times per activation and a function may have
// at most k+1 live activations.  Locals get fresh cells per activation and
// every allocation gets a fresh heap cell; observations are reported under
// the abstract location names the analyses use.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ptwb/analysis_common.hpp"
#include "ptwb/error.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/memory_model.hpp"

namespace ptwb {

struct CVal {
  enum class Kind : std::uint8_t { Undef, Null, Unknown, Ptr, Func };
  Kind kind = Kind::Undef;
  int v = 0;  // cell index or function id
  auto operator<=>(const CVal&) const = default;
};

/// Final memory of one complete path: cell name -> value names.
using FinalStore = std::map<std::string, std::set<std::string>>;

struct OracleOptions {
  int loop_bound = 0;
  long long max_paths = 200'000;
  long long max_steps = 50'000'000;
  bool collect_final_stores = false;
};

struct OracleResult {
  std::map<CallSite, LocSet> observed;  // (function, node) of each PoI
  long long paths = 0;
  long long truncated = 0;
  std::set<FinalStore> final_stores;
};

namespace detail {

struct Cell {
  LocId abs;
  int serial = 0;  // frame serial for locals, instance number for heap cells
  bool alive = true;
  bool multi = false;  // monolithic array: holds every value ever stored
  std::vector<CVal> vals;
};

struct Frame {
  FuncId f = 0;
  NodeId pc = kEntryNode;
  int serial = 0;
  std::map<LocId, int> cells;
  std::map<NodeId, int> loops;
};

struct CState {
  std::vector<Cell> cells;
  std::map<LocId, int> globals;
  std::vector<Frame> stack;
  std::map<int, int> heap_count;
  int frames = 0;
};

class Interpreter {
 public:
  Interpreter(const ProgramIR& ir, const OracleOptions& opt) : ir_(ir), opt_(opt) {
    for (const GlobalDecl& g : ir.globals) global_init_[g.var] = g.initializer ? *g.initializer : kNullLoc;
  }

  OracleResult run() {
    CState s;
    Frame main;
    main.f = ir_.entry;
    main.serial = s.frames++;
    s.stack.push_back(main);
    for (LocId p : ir_.function(ir_.entry).params)
      if (ir_.locs[p].pointer_depth > 0) write(s, p, CVal{CVal::Kind::Unknown, 0});
    std::vector<CState> work{std::move(s)};
    while (!work.empty()) {
      CState cur = std::move(work.back());
      work.pop_back();
      std::vector<CState> next = step(std::move(cur));
      for (auto it = next.rbegin(); it != next.rend(); ++it) work.push_back(std::move(*it));
    }
    return std::move(res_);
  }

 private:
  // Cells ---------------------------------------------------------------------

  int new_cell(CState& s, LocId abs, int serial, std::vector<CVal> init) {
    Cell c;
    c.abs = abs;
    c.serial = serial;
    c.multi = ir_.locs[abs].kind == LocKind::Array;
    c.vals = std::move(init);
    s.cells.push_back(std::move(c));
    return static_cast<int>(s.cells.size()) - 1;
  }

  int cell_of(CState& s, LocId l) {
    const LocInfo& info = ir_.locs[l];
    if (info.owner != kNoFunction) {
      Frame& fr = s.stack.back();
      if (auto it = fr.cells.find(l); it != fr.cells.end()) return it->second;
      int c = new_cell(s, l, fr.serial, {CVal{}});
      s.stack.back().cells[l] = c;
      return c;
    }
    if (auto it = s.globals.find(l); it != s.globals.end()) return it->second;
    int c = new_cell(s, l, 0, {CVal{}});
    s.globals[l] = c;
    if (auto it = global_init_.find(l); it != global_init_.end()) {
      CVal v = value_of(s, it->second);
      s.cells[static_cast<std::size_t>(c)].vals = {v};
    }
    return c;
  }

  /// The value of the expression "&l".
  CVal value_of(CState& s, LocId l) {
    const LocInfo& info = ir_.locs[l];
    switch (info.kind) {
      case LocKind::Null: return CVal{CVal::Kind::Null, 0};
      case LocKind::Unknown: return CVal{CVal::Kind::Unknown, 0};
      case LocKind::Func: return CVal{CVal::Kind::Func, info.func};
      default: return CVal{CVal::Kind::Ptr, cell_of(s, l)};
    }
  }

  std::vector<CVal> read(CState& s, LocId key) { return s.cells[static_cast<std::size_t>(cell_of(s, key))].vals; }

  static void store(CState& s, int c, CVal v) {
    Cell& cell = s.cells[static_cast<std::size_t>(c)];
    if (cell.multi) {
      if (std::find(cell.vals.begin(), cell.vals.end(), v) == cell.vals.end()) cell.vals.push_back(v);
    } else {
      cell.vals = {v};
    }
  }

  void write(CState& s, LocId key, CVal v) { store(s, cell_of(s, key), v); }

  LocId abstract(const CState& s, CVal v) const {
    switch (v.kind) {
      case CVal::Kind::Null: return kNullLoc;
      case CVal::Kind::Unknown: return kUnknownLoc;
      case CVal::Kind::Func: return *ir_.locs.find("fn:" + ir_.function(v.v).name);
      case CVal::Kind::Ptr: return s.cells[static_cast<std::size_t>(v.v)].abs;
      default: return kUnknownLoc;
    }
  }

  std::string cell_name(const CState& s, int c) const {
    const Cell& cell = s.cells[static_cast<std::size_t>(c)];
    std::string n = ir_.locs.name(cell.abs);
    const LocInfo& info = ir_.locs[cell.abs];
    if (info.kind == LocKind::Heap || info.owner != kNoFunction) n += "#" + std::to_string(cell.serial);
    return n;
  }

  std::string value_name(const CState& s, CVal v) const {
    switch (v.kind) {
      case CVal::Kind::Undef: return "undef";
      case CVal::Kind::Ptr: return cell_name(s, v.v);
      default: return ir_.locs.name(abstract(s, v));
    }
  }

  void observe(const CState& s, const Node& n, CVal v) {
    if (!n.is_poi() || v.kind == CVal::Kind::Undef) return;
    const Frame& fr = s.stack.back();
    res_.observed[{fr.f, fr.pc}].insert(abstract(s, v));
  }

  /// Cell a pointer value designates, or nothing when dereferencing it ends the path.
  std::optional<int> target(const CState& s, CVal v) const {
    if (v.kind != CVal::Kind::Ptr) return std::nullopt;
    if (!s.cells[static_cast<std::size_t>(v.v)].alive) return std::nullopt;
    return v.v;
  }

  // Execution -----------------------------------------------------------------

  void finish(const CState& s) {
    ++res_.paths;
    if (res_.paths > opt_.max_paths)
      throw BudgetExceeded("oracle: path budget of " + std::to_string(opt_.max_paths) + " exceeded");
    if (!opt_.collect_final_stores) return;
    FinalStore fs;
    for (int c = 0; c < static_cast<int>(s.cells.size()); ++c) {
      const Cell& cell = s.cells[static_cast<std::size_t>(c)];
      const LocInfo& info = ir_.locs[cell.abs];
      if (!cell.alive || info.is_temp || info.is_return_slot || !ir_.locs.is_key(cell.abs)) continue;
      std::set<std::string> vals;
      for (CVal v : cell.vals)
        if (v.kind != CVal::Kind::Undef) vals.insert(value_name(s, v));
      if (!vals.empty()) fs[cell_name(s, c)] = std::move(vals);
    }
    res_.final_stores.insert(std::move(fs));
  }

  void truncate() {
    ++res_.truncated;
    ++res_.paths;
    if (res_.paths > opt_.max_paths)
      throw BudgetExceeded("oracle: path budget of " + std::to_string(opt_.max_paths) + " exceeded");
  }

  /// Moves the top frame to its single successor.
  void advance(CState& s, int which = 0) {
    Frame& fr = s.stack.back();
    fr.pc = ir_.function(fr.f).succ[static_cast<std::size_t>(fr.pc)].at(static_cast<std::size_t>(which));
  }

  std::vector<CState> step(CState s) {
    if (++steps_ > opt_.max_steps)
      throw BudgetExceeded("oracle: step budget of " + std::to_string(opt_.max_steps) + " exceeded");
    Frame& fr = s.stack.back();
    const FunctionIR& f = ir_.function(fr.f);
    const Node& n = f.node(fr.pc);
    std::vector<CState> out;
    switch (n.kind) {
      case NodeKind::Entry:
        for (LocId l : f.uninit_locals) write(s, l, CVal{CVal::Kind::Unknown, 0});
        advance(s);
        out.push_back(std::move(s));
        break;
      case NodeKind::Nop:
        advance(s);
        out.push_back(std::move(s));
        break;
      case NodeKind::Branch: {
        const auto& succ = f.succ[static_cast<std::size_t>(fr.pc)];
        for (std::size_t i = 0; i < succ.size(); ++i) {
          CState t = s;
          Frame& tf = t.stack.back();
          if (n.loop_header && i == 0) {
            int& count = tf.loops[tf.pc];
            if (count >= opt_.loop_bound) continue;
            ++count;
          }
          tf.pc = succ[i];
          out.push_back(std::move(t));
        }
        break;
      }
      case NodeKind::AddressOf:
        write(s, *n.dst, value_of(s, *n.src));
        advance(s);
        out.push_back(std::move(s));
        break;
      case NodeKind::Copy:
        for (CVal v : read(s, *n.src)) {
          CState t = s;
          write(t, *n.dst, v);
          advance(t);
          out.push_back(std::move(t));
        }
        break;
      case NodeKind::Load:
        for (CVal p : read(s, *n.src)) {
          observe(s, n, p);
          auto c = target(s, p);
          if (!c) {
            truncate();
            continue;
          }
          if (!n.dst) {
            CState t = s;
            advance(t);
            out.push_back(std::move(t));
            continue;
          }
          for (CVal v : s.cells[static_cast<std::size_t>(*c)].vals) {
            CState t = s;
            write(t, *n.dst, v);
            advance(t);
            out.push_back(std::move(t));
          }
        }
        break;
      case NodeKind::Store:
        for (CVal p : read(s, *n.dst)) {
          observe(s, n, p);
          auto c = target(s, p);
          if (!c) {
            truncate();
            continue;
          }
          if (!n.src) {
            CState t = s;
            advance(t);
            out.push_back(std::move(t));
            continue;
          }
          for (CVal v : read(s, *n.src)) {
            CState t = s;
            store(t, *c, v);
            advance(t);
            out.push_back(std::move(t));
          }
        }
        break;
      case NodeKind::Alloc: {
        LocId h = alloc_heap_loc(ir_, n);
        int instance = s.heap_count[n.alloc_line]++;
        CVal init;
        if (n.alloc_cell_is_pointer)
          init = CVal{n.alloc_kind == AllocKind::Calloc ? CVal::Kind::Null : CVal::Kind::Unknown, 0};
        int c = new_cell(s, h, instance, {init});
        write(s, *n.dst, CVal{CVal::Kind::Ptr, c});
        advance(s);
        out.push_back(std::move(s));
        break;
      }
      case NodeKind::Call: call(std::move(s), n, out); break;
      case NodeKind::Exit: ret(std::move(s), out); break;
    }
    return out;
  }

  void call(CState s, const Node& n, std::vector<CState>& out) {
    std::vector<std::pair<CState, FuncId>> targets;
    if (n.callee) {
      targets.emplace_back(std::move(s), *n.callee);
    } else {
      for (CVal v : read(s, *n.callee_ptr)) {
        observe(s, n, v);
        if (v.kind != CVal::Kind::Func) {
          truncate();
          continue;
        }
        targets.emplace_back(s, v.v);
      }
    }
    for (auto& [t, g] : targets) {
      int active = 0;
      for (const Frame& fr : t.stack) active += fr.f == g;
      if (active > opt_.loop_bound) {
        truncate();
        continue;
      }
      // actual values are read in the caller; each may have several choices
      std::vector<std::vector<std::pair<LocId, CVal>>> choices{{}};
      for (const Binding& b : bindings(ir_, n, g)) {
        std::vector<CVal> vals = b.actual->kind == Actual::Kind::Key ? read(t, b.actual->loc)
                                                                     : std::vector<CVal>{value_of(t, b.actual->loc)};
        std::vector<std::vector<std::pair<LocId, CVal>>> grown;
        for (const auto& c : choices)
          for (CVal v : vals) {
            auto d = c;
            d.emplace_back(b.formal, v);
            grown.push_back(std::move(d));
          }
        choices = std::move(grown);
      }
      for (const auto& binding : choices) {
        CState u = t;
        Frame fr;
        fr.f = g;
        fr.serial = u.frames++;
        u.stack.push_back(std::move(fr));
        for (const auto& [formal, v] : binding) write(u, formal, v);
        out.push_back(std::move(u));
      }
    }
  }

  void ret(CState s, std::vector<CState>& out) {
    if (s.stack.size() == 1) {
      finish(s);
      return;
    }
    Frame done = std::move(s.stack.back());
    s.stack.pop_back();
    const FunctionIR& callee = ir_.function(done.f);
    std::vector<CVal> rv{CVal{}};
    if (callee.ret_slot) {
      if (auto it = done.cells.find(*callee.ret_slot); it != done.cells.end())
        rv = s.cells[static_cast<std::size_t>(it->second)].vals;
    }
    for (const auto& [loc, c] : done.cells) s.cells[static_cast<std::size_t>(c)].alive = false;
    const Frame& caller = s.stack.back();
    const Node& call = ir_.function(caller.f).node(caller.pc);
    if (!call.ret_target) {
      advance(s);
      out.push_back(std::move(s));
      return;
    }
    for (CVal v : rv) {
      CState t = s;
      write(t, *call.ret_target, v);
      advance(t);
      out.push_back(std::move(t));
    }
  }

  const ProgramIR& ir_;
  OracleOptions opt_;
  std::map<LocId, LocId> global_init_;
  OracleResult res_;
  long long steps_ = 0;
};

}  // namespace detail

inline OracleResult interpret_all(const ProgramIR& ir, const OracleOptions& opt) {
  if (opt.loop_bound < 0) throw Error("oracle: loop bound must be non-negative");
  return detail::Interpreter(ir, opt).run();
}

inline OracleResult interpret_all(const ProgramIR& ir, int loop_bound) {
  OracleOptions opt;
  opt.loop_bound = loop_bound;
  return interpret_all(ir, opt);
}

}  // namespace ptwb
