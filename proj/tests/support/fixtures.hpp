#pragma once

// Helpers shared by the test binaries: loading fixtures, finding points of
// interest, turning location sets into names.

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptwb/report.hpp"

namespace ptwb::testing {

inline std::string fixture_path(const std::string& name) { return std::string(PTWB_FIXTURES) + "/" + name + ".mc"; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline ProgramIR load_fixture(const std::string& name) {
  SourceProgram sp;
  sp.files.push_back(read_source_file(fixture_path(name)));
  return build_ir(sp);
}

inline std::vector<std::string> fixture_names() { return {"P1", "P2", "P3", "P4", "P5", "P6"}; }

inline std::set<std::string> names(const ProgramIR& ir, const LocSet& s) {
  std::set<std::string> out;
  for (LocId l : s) out.insert(ir.locs.name(l));
  return out;
}

inline LocId loc(const ProgramIR& ir, const std::string& name) {
  auto id = ir.locs.find(name);
  if (!id) throw std::runtime_error("no location named " + name);
  return *id;
}

inline LocSet locs(const ProgramIR& ir, const std::vector<std::string>& ns) {
  LocSet s;
  for (const auto& n : ns) s.insert(loc(ir, n));
  return s;
}

inline FuncId fn(const ProgramIR& ir, const std::string& name) {
  auto f = ir.find_function(name);
  if (!f) throw std::runtime_error("no function named " + name);
  return *f;
}

/// The dereference points on a source line, in report order.
inline std::vector<PoISite> pois_on_line(const ProgramIR& ir, int line) {
  std::vector<PoISite> out;
  for (const PoISite& s : enumerate_pois(ir))
    if (s.line == line) out.push_back(s);
  return out;
}

inline PoISite poi_at(const ProgramIR& ir, int line, int level = 1) {
  for (const PoISite& s : enumerate_pois(ir))
    if (s.line == line && s.level == level) return s;
  throw std::runtime_error("no dereference on line " + std::to_string(line));
}

inline const PoIRecord& record_at(const std::vector<PoIRecord>& rs, int line, int level = 1) {
  for (const PoIRecord& r : rs)
    if (r.site.line == line && r.site.level == level) return r;
  throw std::runtime_error("no record on line " + std::to_string(line));
}

/// Nodes of one kind in a function, in id order.
inline std::vector<const Node*> nodes_of(const FunctionIR& f, NodeKind k) {
  std::vector<const Node*> out;
  for (const Node& n : f.nodes)
    if (n.kind == k) out.push_back(&n);
  return out;
}

}  // namespace ptwb::testing
