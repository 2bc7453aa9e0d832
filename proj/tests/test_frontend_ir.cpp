#include <gtest/gtest.h>

#include <regex>

#include "support/ast_interp.hpp"
#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "ptwb/ir_print.hpp"

using namespace ptwb;
using namespace ptwb::testing;

namespace {

ast::Program parse_text(const std::string& text) {
  SourceProgram sp;
  sp.files.push_back({"t.mc", text});
  return parse(sp);
}

int input_error_line(const std::string& text) {
  try {
    build_ir_from_text(text, "t.mc");
  } catch (const InputError& e) {
    return e.line();
  }
  return -1;
}

std::string input_error(const std::string& text) {
  try {
    build_ir_from_text(text, "t.mc");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

// parse ---------------------------------------------------------------------

TEST(Parse, FixtureP2HasOneFunctionAndTwoStatements) {
  ast::Program p = parse_text("int a; void main(){ int *p = &a; *p = 1; }");
  ASSERT_EQ(p.functions.size(), 1u);
  EXPECT_EQ(p.functions[0].name, "main");
  ASSERT_TRUE(p.functions[0].body);
  EXPECT_EQ(p.functions[0].body->size(), 2u);
  EXPECT_EQ((*p.functions[0].body)[0]->kind, ast::StmtKind::Decl);
  EXPECT_EQ((*p.functions[0].body)[1]->kind, ast::StmtKind::Assign);
}

TEST(Parse, EmptyFileParsesButHasNoEntry) {
  ast::Program p = parse_text("");
  EXPECT_TRUE(p.functions.empty());
  EXPECT_TRUE(p.globals.empty());
  EXPECT_THROW(build_ir_from_text(""), Error);
  EXPECT_NE(input_error("").find("main"), std::string::npos);
}

TEST(Parse, MissingInitializerIsASyntaxErrorOnItsLine) {
  EXPECT_THROW(parse_text("int *p = ;"), InputError);
  EXPECT_EQ(input_error_line("int *p = ;"), 1);
  EXPECT_EQ(input_error_line("int a;\n\nvoid main() {\n  int *p = ;\n}\n"), 4);
}

TEST(Parse, KeepsLineNumbers) {
  ast::Program p = parse_text("int a;\n\nvoid main() {\n  int *p;\n\n  p = &a;\n}\n");
  const auto& body = *p.functions[0].body;
  EXPECT_EQ(p.functions[0].line, 3);
  EXPECT_EQ(body[0]->line, 4);
  EXPECT_EQ(body[1]->line, 6);
}

TEST(Parse, RejectsDuplicateFunctionsAndUnknownNames) {
  EXPECT_NE(input_error("void f() {}\nvoid f() {}\nvoid main() {}").find("duplicate function"), std::string::npos);
  EXPECT_EQ(input_error_line("int a;\nvoid main() {\n  int *p;\n  p = &b;\n}"), 4);
  EXPECT_NE(input_error("int a;\nvoid main() {\n  int *p;\n  p = &b;\n}").find("unknown identifier"), std::string::npos);
}

TEST(Parse, RejectsCastsAndPointerArithmetic) {
  EXPECT_THROW(build_ir_from_text("int a; void main() { int *p; p = (int *)&a; }"), InputError);
  EXPECT_THROW(build_ir_from_text("int a; void main() { int *p; p = &a + 1; }"), InputError);
}

// lower -----------------------------------------------------------------------

TEST(Lower, MallocBecomesAllocOnItsLine) {
  ProgramIR ir = build_ir_from_text("int *p;\nvoid main() {\n\n\n\n\n  p = malloc(4);\n}\n");
  const FunctionIR& f = ir.function(fn(ir, "main"));
  auto allocs = nodes_of(f, NodeKind::Alloc);
  ASSERT_EQ(allocs.size(), 1u);
  EXPECT_EQ(allocs[0]->alloc_line, 7);
  EXPECT_EQ(*allocs[0]->dst, loc(ir, "g:p"));
  EXPECT_EQ(ir.locs[loc(ir, "heap:7")].kind, LocKind::Heap);
  EXPECT_EQ(names(ir, run_fis(ir).pts.get(loc(ir, "g:p"))), (std::set<std::string>{"heap:7", "null"}));
}

TEST(Lower, AllHeapCallsLowerToAlloc) {
  ProgramIR ir = build_ir_from_text(
      "int *p;\nint *q;\nint *r;\nvoid main() {\n  p = malloc(4);\n  q = calloc(1, 4);\n  r = alloc(4);\n}\n");
  auto allocs = nodes_of(ir.function(fn(ir, "main")), NodeKind::Alloc);
  ASSERT_EQ(allocs.size(), 3u);
  EXPECT_EQ(allocs[0]->alloc_kind, AllocKind::Malloc);
  EXPECT_EQ(allocs[1]->alloc_kind, AllocKind::Calloc);
  EXPECT_EQ(allocs[2]->alloc_kind, AllocKind::Alloc);
  EXPECT_EQ(allocs[1]->alloc_line, 6);
}

TEST(Lower, TwoAllocationsOnOneLineShareALocation) {
  ProgramIR ir = build_ir_from_text("int *p;\nint *q;\nvoid main() {\n  p = malloc(4); q = malloc(4);\n}\n");
  auto pts = run_fis(ir).pts;
  EXPECT_EQ(pts.get(loc(ir, "g:p")), pts.get(loc(ir, "g:q")));
  EXPECT_EQ(names(ir, pts.get(loc(ir, "g:p"))), (std::set<std::string>{"heap:4", "null"}));
}

TEST(Lower, ArrayElementsReadTheMonolithicLocation) {
  ProgramIR ir = build_ir_from_text("int *a[8];\nint *x;\nint *y;\nvoid main() {\n  x = a[3]; y = a[5];\n}\n");
  auto copies = nodes_of(ir.function(fn(ir, "main")), NodeKind::Copy);
  ASSERT_EQ(copies.size(), 2u);
  EXPECT_EQ(*copies[0]->src, loc(ir, "arr:a"));
  EXPECT_EQ(*copies[1]->src, loc(ir, "arr:a"));
  EXPECT_EQ(*copies[0]->dst, loc(ir, "g:x"));
  EXPECT_EQ(*copies[1]->dst, loc(ir, "g:y"));
}

TEST(Lower, StructFieldsAreDistinctLocations) {
  ProgramIR ir = build_ir_from_text(
      "int a;\nint b;\nstruct S { int *f; int *g; };\nstruct S s;\nvoid main() {\n  s.f = &a;\n  s.g = &b;\n}\n");
  auto addrs = nodes_of(ir.function(fn(ir, "main")), NodeKind::AddressOf);
  ASSERT_EQ(addrs.size(), 2u);
  EXPECT_EQ(*addrs[0]->dst, loc(ir, "f:S::f@s"));
  EXPECT_EQ(*addrs[1]->dst, loc(ir, "f:S::g@s"));
  EXPECT_EQ(ir.locs[loc(ir, "f:S::f@s")].kind, LocKind::Field);
}

TEST(Lower, DoubleDerefStoreIsLoadThenStore) {
  ProgramIR ir = build_ir_from_text("int a;\nint *r = &a;\nint *c;\nint **p = &c;\nint ***q = &p;\nvoid main() {\n  **q = r;\n}\n");
  const FunctionIR& f = ir.function(fn(ir, "main"));
  std::vector<const Node*> body;
  for (const Node& n : f.nodes)
    if (n.kind == NodeKind::Load || n.kind == NodeKind::Store) body.push_back(&n);
  ASSERT_EQ(body.size(), 2u);
  EXPECT_EQ(body[0]->kind, NodeKind::Load);
  EXPECT_EQ(body[1]->kind, NodeKind::Store);
  LocId t = *body[0]->dst;
  EXPECT_EQ(*body[0]->src, loc(ir, "g:q"));
  EXPECT_EQ(*body[1]->dst, t);
  EXPECT_EQ(*body[1]->src, loc(ir, "g:r"));
  EXPECT_TRUE(ir.locs[t].is_temp);
  EXPECT_EQ(ir.locs.name(t), "l:main::__t0");
  // the load feeds the store: t = *q runs before *t = r
  EXPECT_LT(body[0] - f.nodes.data(), body[1] - f.nodes.data());
}

TEST(Lower, DoubleDerefStoreWritesWhereAHandLoweredProgramDoes) {
  std::string src = "int a;\nint *r = &a;\nint *c;\nint **p = &c;\nint ***q = &p;\nvoid main() {\n  **q = r;\n}\n";
  std::string hand = "int a;\nint *r = &a;\nint *c;\nint **p = &c;\nint ***q = &p;\nvoid main() {\n  int **t;\n  t = *q;\n  *t = r;\n}\n";
  OracleOptions o;
  o.collect_final_stores = true;
  auto direct = interpret_all(build_ir_from_text(src), o).final_stores;
  ASSERT_EQ(direct.size(), 1u);
  EXPECT_EQ(direct.begin()->at("g:c"), (std::set<std::string>{"g:a"}));
  auto lowered = interpret_all(build_ir_from_text(hand), o).final_stores;
  ASSERT_EQ(lowered.size(), 1u);
  auto expected = *lowered.begin();
  expected.erase("l:main::t#0");
  EXPECT_EQ(*direct.begin(), expected);
}

TEST(Lower, DirectCallsGetCallGraphEdgesIndirectOnesDoNot) {
  ProgramIR ir = build_ir_from_text(
      "int a;\nvoid f(int *x) { *x = 1; }\nvoid (*fp)(int *x);\nvoid main() {\n  f(&a);\n  fp = f;\n  fp(&a);\n}\n");
  FuncId m = fn(ir, "main"), f = fn(ir, "f");
  ASSERT_EQ(ir.pcg_edges.size(), 1u);
  EXPECT_EQ(ir.pcg_edges[0].caller, m);
  EXPECT_EQ(ir.pcg_edges[0].callee, f);
  auto calls = nodes_of(ir.function(m), NodeKind::Call);
  ASSERT_EQ(calls.size(), 2u);
  EXPECT_TRUE(calls[0]->callee.has_value());
  EXPECT_FALSE(calls[1]->callee.has_value());
  EXPECT_EQ(*calls[1]->callee_ptr, loc(ir, "g:fp"));
  EXPECT_EQ(ir.function(m).node(ir.pcg_edges[0].call).kind, NodeKind::Call);
}

TEST(Lower, RejectsAddressOfTemporaryAndConstAssignment) {
  EXPECT_NE(input_error("int a;\nint *f() { return &a; }\nvoid main() {\n  int **q;\n  q = &f();\n}").find("address of a temporary"),
            std::string::npos);
  EXPECT_EQ(input_error_line("int a;\nconst int *cp = &a;\nvoid main() {\n  cp = &a;\n}"), 4);
  EXPECT_NE(input_error("int a;\nconst int *cp;\nvoid main() {}").find("initializer"), std::string::npos);
}

TEST(Lower, LiteralAddressGetsItsOwnLocation) {
  ProgramIR ir = build_ir_from_text("void main() {\n  *100 = 1;\n  *200 = 2;\n}\n");
  auto pois = enumerate_pois(ir);
  ASSERT_EQ(pois.size(), 2u);
  EXPECT_TRUE(pois[0].literal_address);
  auto pts = run_fis(ir).pts;
  EXPECT_EQ(names(ir, pts.get(pois[0].pointer)), (std::set<std::string>{"addr:100"}));
  EXPECT_EQ(names(ir, pts.get(pois[1].pointer)), (std::set<std::string>{"addr:200"}));
}

TEST(Lower, UninitializedLocalsAreRecorded) {
  ProgramIR ir = build_ir_from_text("int a;\nvoid main() {\n  int *p;\n  int *q = &a;\n  int n;\n  p = q;\n}\n");
  const FunctionIR& f = ir.function(fn(ir, "main"));
  ASSERT_EQ(f.uninit_locals.size(), 1u);
  EXPECT_EQ(f.uninit_locals[0], loc(ir, "l:main::p"));
}

// structure -------------------------------------------------------------------

void check_structure(const ProgramIR& ir) {
  for (const FunctionIR& f : ir.functions) {
    int entries = 0, exits = 0;
    for (const Node& n : f.nodes) {
      entries += n.kind == NodeKind::Entry;
      exits += n.kind == NodeKind::Exit;
      switch (n.kind) {
        case NodeKind::AddressOf:
        case NodeKind::Copy:
          EXPECT_TRUE(n.dst && n.src);
          break;
        case NodeKind::Load: EXPECT_TRUE(n.src.has_value()); break;
        case NodeKind::Store: EXPECT_TRUE(n.dst.has_value()); break;
        case NodeKind::Alloc: EXPECT_TRUE(n.dst && n.alloc_line > 0); break;
        case NodeKind::Call: EXPECT_NE(n.callee.has_value(), n.callee_ptr.has_value()); break;
        default: break;
      }
    }
    EXPECT_EQ(entries, 1) << f.name;
    EXPECT_EQ(exits, 1) << f.name;
    EXPECT_EQ(f.node(kEntryNode).kind, NodeKind::Entry);
    EXPECT_EQ(f.node(kExitNode).kind, NodeKind::Exit);
    EXPECT_TRUE(f.pred[kEntryNode].empty()) << f.name;
    EXPECT_TRUE(f.succ[kExitNode].empty()) << f.name;
    std::vector<char> seen(f.size(), 0);
    std::vector<NodeId> stack{kEntryNode};
    seen[kEntryNode] = 1;
    while (!stack.empty()) {
      NodeId n = stack.back();
      stack.pop_back();
      for (NodeId s : f.succ[static_cast<std::size_t>(n)]) {
        EXPECT_NE(std::find(f.pred[static_cast<std::size_t>(s)].begin(), f.pred[static_cast<std::size_t>(s)].end(), n),
                  f.pred[static_cast<std::size_t>(s)].end());
        if (!seen[static_cast<std::size_t>(s)]) {
          seen[static_cast<std::size_t>(s)] = 1;
          stack.push_back(s);
        }
      }
    }
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.nodes[i].kind != NodeKind::Exit) {
        EXPECT_TRUE(seen[i]) << f.name << " node " << i;
      }
  }
  for (const PcgEdge& e : ir.pcg_edges) {
    ASSERT_LT(static_cast<std::size_t>(e.caller), ir.functions.size());
    ASSERT_LT(static_cast<std::size_t>(e.callee), ir.functions.size());
    EXPECT_EQ(ir.function(e.caller).node(e.call).kind, NodeKind::Call);
    EXPECT_EQ(ir.function(e.caller).node(e.call).callee, e.callee);
  }
}

TEST(Structure, FixturesAreWellFormed) {
  for (const auto& name : fixture_names()) {
    SCOPED_TRACE(name);
    check_structure(load_fixture(name));
  }
}

TEST(Structure, RandomProgramsAreWellFormed) {
  for (unsigned long long seed = 0; seed < 200; ++seed) {
    SCOPED_TRACE(seed);
    check_structure(build_ir_from_text(random_program(seed)));
  }
}

TEST(Structure, LoweringIsDeterministic) {
  for (unsigned long long seed = 0; seed < 20; ++seed) {
    std::string text = random_program(seed);
    std::ostringstream a, b;
    print_ir(a, build_ir_from_text(text));
    print_ir(b, build_ir_from_text(text));
    EXPECT_EQ(a.str(), b.str());
  }
}

// enumerate_pois ----------------------------------------------------------------

TEST(Pois, P5ElseBranchHasOnePoINamingP) {
  ProgramIR ir = load_fixture("P5");
  auto on12 = pois_on_line(ir, 12);
  ASSERT_EQ(on12.size(), 1u);
  EXPECT_EQ(ir.locs.name(on12[0].pointer), "l:f::p");
  EXPECT_EQ(on12[0].kind, PoIKind::Store);
  EXPECT_EQ(on12[0].text, "*p");
}

TEST(Pois, DoubleDerefHasTwoLevels) {
  ProgramIR ir = build_ir_from_text("int a;\nint *r = &a;\nint *c;\nint **p = &c;\nint ***q = &p;\nvoid main() {\n  **q = r;\n}\n");
  auto pois = enumerate_pois(ir);
  ASSERT_EQ(pois.size(), 2u);
  EXPECT_EQ(pois[0].level, 1);
  EXPECT_EQ(pois[1].level, 2);
  EXPECT_EQ(ir.locs.name(pois[0].pointer), "g:q");
  EXPECT_TRUE(ir.locs[pois[1].pointer].is_temp);
  EXPECT_EQ(pois[1].text, "**q");
}

TEST(Pois, NoDerefsNoPois) {
  ProgramIR ir = build_ir_from_text("int a;\nint *p;\nvoid main() {\n  p = &a;\n}\n");
  EXPECT_TRUE(enumerate_pois(ir).empty());
}

TEST(Pois, LoadsStoresAndIndirectCalls) {
  ProgramIR ir = build_ir_from_text(
      "int a;\nint *p = &a;\nint **q = &p;\nvoid f() {}\nvoid (*fp)();\nvoid main() {\n  int *x;\n  x = *q;\n  *p = 3;\n  "
      "fp = f;\n  fp();\n}\n");
  auto pois = enumerate_pois(ir);
  ASSERT_EQ(pois.size(), 3u);
  EXPECT_EQ(pois[0].kind, PoIKind::Load);
  EXPECT_EQ(ir.locs.name(pois[0].pointer), "g:q");
  EXPECT_EQ(pois[1].kind, PoIKind::Store);
  EXPECT_EQ(ir.locs.name(pois[1].pointer), "g:p");
  EXPECT_EQ(pois[2].kind, PoIKind::IndirectCall);
  EXPECT_EQ(ir.locs.name(pois[2].pointer), "g:fp");
}

TEST(Pois, OrderedByFileLineColumnLevel) {
  for (unsigned long long seed = 0; seed < 50; ++seed) {
    auto pois = enumerate_pois(build_ir_from_text(random_program(seed)));
    for (std::size_t i = 1; i < pois.size(); ++i)
      EXPECT_LE(std::tie(pois[i - 1].file, pois[i - 1].line, pois[i - 1].col, pois[i - 1].level),
                std::tie(pois[i].file, pois[i].line, pois[i].col, pois[i].level));
  }
}

// One PoI per '*' that is not part of a declaration, plus one per call through
// a pointer variable.
int textual_poi_count(const std::string& text, const std::set<std::string>& fptrs) {
  int n = 0;
  std::istringstream in(text);
  std::string line;
  static const std::regex decl(R"(^\s*(int|void|struct|const)\b)");
  while (std::getline(in, line)) {
    if (auto c = line.find("//"); c != std::string::npos) line.erase(c);
    if (std::regex_search(line, decl)) continue;
    n += static_cast<int>(std::count(line.begin(), line.end(), '*'));
    for (const auto& fp : fptrs)
      for (auto pos = line.find(fp + "("); pos != std::string::npos; pos = line.find(fp + "(", pos + 1))
        if (pos == 0 || !std::isalnum(static_cast<unsigned char>(line[pos - 1]))) ++n;
  }
  return n;
}

TEST(Pois, CountMatchesATextualScan) {
  for (const auto& name : fixture_names()) {
    ProgramIR ir = load_fixture(name);
    EXPECT_EQ(static_cast<int>(enumerate_pois(ir).size()), textual_poi_count(slurp(fixture_path(name)), {})) << name;
  }
  // generated programs without early returns have no dead statements
  GenOptions opt;
  for (unsigned long long seed = 0; seed < 300; ++seed) {
    std::string text = random_program(seed, opt);
    if (std::regex_search(text, std::regex(R"(\n\s{4,}return)"))) continue;
    EXPECT_EQ(static_cast<int>(enumerate_pois(build_ir_from_text(text)).size()), textual_poi_count(text, {"gfp"}))
        << "seed " << seed;
  }
}

// lowering against the syntax tree -------------------------------------------------

void same_as_reference(const std::string& text, int k) {
  SourceProgram sp;
  sp.files.push_back({"input.mc", text});
  ast::Program tree = parse(sp);
  ProgramIR ir = lower(tree);
  OracleOptions o;
  o.loop_bound = k;
  o.collect_final_stores = true;
  OracleResult lowered = interpret_all(ir, o);
  RefResult direct = RefInterpreter(tree, k).run();
  EXPECT_EQ(lowered.final_stores, direct.final_stores);
  EXPECT_EQ(lowered.paths, direct.paths);
  EXPECT_EQ(lowered.truncated, direct.truncated);
  std::map<std::tuple<int, int, int>, std::set<std::string>> seen;
  for (const PoISite& s : enumerate_pois(ir))
    if (auto it = lowered.observed.find({s.function, s.node}); it != lowered.observed.end())
      for (LocId l : it->second) seen[{s.line, s.col, s.level}].insert(ir.locs.name(l));
  EXPECT_EQ(seen, direct.observed);
}

TEST(LoweringPreservesSemantics, Fixtures) {
  for (const auto& name : fixture_names())
    for (int k = 0; k <= 3; ++k) {
      SCOPED_TRACE(name + " k=" + std::to_string(k));
      same_as_reference(slurp(fixture_path(name)), k);
    }
}

TEST(LoweringPreservesSemantics, RandomPrograms) {
  for (unsigned long long seed = 0; seed < 150; ++seed)
    for (int k = 0; k <= 1; ++k) {
      SCOPED_TRACE("seed " + std::to_string(seed) + " k=" + std::to_string(k));
      same_as_reference(random_program(seed, GenOptions{4, 20}), k);
    }
}
