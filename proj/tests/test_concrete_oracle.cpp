#include <gtest/gtest.h>

#include "support/ast_interp.hpp"
#include "support/fixtures.hpp"
#include "support/gen.hpp"

using namespace ptwb;
using namespace ptwb::testing;

namespace {

std::set<std::string> observed_at(const ProgramIR& ir, const OracleResult& r, int line, int level = 1) {
  PoISite s = poi_at(ir, line, level);
  auto it = r.observed.find({s.function, s.node});
  return it == r.observed.end() ? std::set<std::string>{} : names(ir, it->second);
}

}  // namespace

TEST(Oracle, P2StraightLine) {
  ProgramIR ir = load_fixture("P2");
  OracleResult r = interpret_all(ir, 0);
  EXPECT_EQ(observed_at(ir, r, 6), (std::set<std::string>{"g:a"}));
  EXPECT_EQ(r.paths, 1);
  EXPECT_EQ(r.truncated, 0);
}

TEST(Oracle, P5ElseArmSeesBothActuals) {
  ProgramIR ir = load_fixture("P5");
  OracleResult r = interpret_all(ir, 0);
  EXPECT_EQ(observed_at(ir, r, 12), (std::set<std::string>{"g:a", "g:b"}));
  EXPECT_EQ(observed_at(ir, r, 10), (std::set<std::string>{"g:g"}));
  // two calls, two arms each
  EXPECT_EQ(r.paths, 4);
}

TEST(Oracle, P1ObservesOnlyTheAssignedTarget) {
  ProgramIR ir = load_fixture("P1");
  OracleResult r = interpret_all(ir, 0);
  EXPECT_EQ(observed_at(ir, r, 7), (std::set<std::string>{"g:a"}));
  EXPECT_EQ(r.paths, 1);
  FisResult fis = run_fis(ir);
  EXPECT_EQ(names(ir, fis.pts.get(loc(ir, "g:p"))), (std::set<std::string>{"g:a", "null"}));
}

TEST(Oracle, LoopsRunZeroToKTimes) {
  ProgramIR ir = build_ir_from_text(
      "int a;\nint b;\nint c;\nint *p;\nvoid main() {\n  p = &a;\n  while (c) {\n    *p = 1;\n    p = &b;\n  }\n}\n");
  for (int k = 0; k <= 3; ++k) {
    OracleResult r = interpret_all(ir, k);
    EXPECT_EQ(r.paths, k + 1) << k;
    std::set<std::string> want;
    if (k >= 1) want.insert("g:a");
    if (k >= 2) want.insert("g:b");
    EXPECT_EQ(observed_at(ir, r, 8), want) << k;
  }
}

TEST(Oracle, NestedBranchesMultiply) {
  ProgramIR ir = build_ir_from_text(
      "int a;\nint c;\nint *p;\nvoid main() {\n  if (c) {\n    p = &a;\n  }\n  if (c) {\n    p = &a;\n  }\n  if (c) {\n    p = &a;\n  }\n}\n");
  EXPECT_EQ(interpret_all(ir, 0).paths, 8);
}

TEST(Oracle, NullDereferenceIsObservedAndEndsThePath) {
  ProgramIR ir = build_ir_from_text(
      "int a;\nint c;\nint **p;\nint *q;\nvoid main() {\n  if (c) {\n    q = *p;\n  }\n  q = &a;\n  *q = 1;\n}\n");
  OracleOptions o;
  o.collect_final_stores = true;
  OracleResult r = interpret_all(ir, o);
  EXPECT_EQ(observed_at(ir, r, 7), (std::set<std::string>{"null"}));
  EXPECT_EQ(observed_at(ir, r, 10), (std::set<std::string>{"g:a"}));
  EXPECT_EQ(r.paths, 2);
  EXPECT_EQ(r.truncated, 1);
  ASSERT_EQ(r.final_stores.size(), 1u);
  EXPECT_EQ(r.final_stores.begin()->at("g:q"), (std::set<std::string>{"g:a"}));
}

TEST(Oracle, UnknownDereferenceIsObserved) {
  ProgramIR ir = build_ir_from_text("int a;\nvoid main() {\n  int *p;\n  *p = 1;\n}\n");
  OracleResult r = interpret_all(ir, 0);
  EXPECT_EQ(observed_at(ir, r, 4), (std::set<std::string>{"unknown"}));
  EXPECT_EQ(r.truncated, 1);
}

TEST(Oracle, HeapCellsUseTheAllocationLine) {
  ProgramIR ir = build_ir_from_text("int *p;\nvoid main() {\n  p = malloc(4);\n  *p = 1;\n}\n");
  OracleResult r = interpret_all(ir, 0);
  EXPECT_EQ(observed_at(ir, r, 4), (std::set<std::string>{"heap:3"}));
}

TEST(Oracle, RecursionIsCutAtTheBound) {
  ProgramIR ir = build_ir_from_text("int a;\nint *p;\nvoid f() {\n  *p = 1;\n  f();\n}\nvoid main() {\n  p = &a;\n  f();\n}\n");
  for (int k = 0; k <= 3; ++k) {
    OracleResult r = interpret_all(ir, k);
    EXPECT_EQ(r.truncated, r.paths) << k;
    // observations made before the cut are kept
    EXPECT_EQ(observed_at(ir, r, 4), (std::set<std::string>{"g:a"})) << k;
  }
}

TEST(Oracle, PathBudget) {
  std::string text = "int a;\nint c;\nint *p;\nvoid main() {\n";
  for (int i = 0; i < 12; ++i) text += "  if (c) {\n    p = &a;\n  }\n";
  text += "}\n";
  ProgramIR ir = build_ir_from_text(text);
  OracleOptions o;
  o.max_paths = 1000;
  EXPECT_THROW(interpret_all(ir, o), BudgetExceeded);
  o.max_paths = 5000;
  EXPECT_EQ(interpret_all(ir, o).paths, 4096);
}

TEST(Oracle, NegativeBoundIsAnError) {
  EXPECT_THROW(interpret_all(load_fixture("P2"), -1), Error);
}

TEST(Oracle, Deterministic) {
  for (unsigned long long seed = 0; seed < 60; ++seed) {
    ProgramIR ir = build_ir_from_text(random_program(seed, GenOptions{4, 20}));
    OracleOptions o;
    o.loop_bound = 1;
    o.collect_final_stores = true;
    OracleResult a = interpret_all(ir, o), b = interpret_all(ir, o);
    EXPECT_EQ(a.observed, b.observed) << seed;
    EXPECT_EQ(a.final_stores, b.final_stores) << seed;
    EXPECT_EQ(a.paths, b.paths) << seed;
  }
}

TEST(Oracle, LargerBoundsSeeMore) {
  for (unsigned long long seed = 0; seed < 60; ++seed) {
    ProgramIR ir = build_ir_from_text(random_program(seed, GenOptions{4, 20}));
    OracleResult prev = interpret_all(ir, 0);
    for (int k = 1; k <= 2; ++k) {
      OracleResult cur = interpret_all(ir, k);
      for (const auto& [site, s] : prev.observed) {
        auto it = cur.observed.find(site);
        ASSERT_NE(it, cur.observed.end()) << seed;
        EXPECT_TRUE(s.subset_of(it->second)) << seed;
      }
      prev = cur;
    }
  }
}

TEST(Oracle, AgreesWithTheSyntaxTreeInterpreter) {
  for (const auto& name : fixture_names())
    for (int k = 0; k <= 3; ++k) {
      std::string text = slurp(fixture_path(name));
      ast::Program tree = parse(SourceFile{name + ".mc", text});
      ProgramIR ir = lower(tree);
      OracleOptions o;
      o.loop_bound = k;
      o.collect_final_stores = true;
      OracleResult r = interpret_all(ir, o);
      RefResult ref = RefInterpreter(tree, k).run();
      EXPECT_EQ(r.final_stores, ref.final_stores) << name << " k=" << k;
      EXPECT_EQ(r.paths, ref.paths) << name << " k=" << k;
    }
}

TEST(Oracle, ContainedInEveryEngine) {
  for (const auto& name : fixture_names()) {
    ProgramIR ir = load_fixture(name);
    FisResult fis = run_fis(ir);
    std::vector<PoIRecord> rs = compare_program(ir, fis, run_fs(ir, fis.targets), run_cs(ir, fis.targets));
    for (int k = 0; k <= 3; ++k) {
      OracleResult r = interpret_all(ir, k);
      for (const PoIRecord& rec : rs) {
        auto it = r.observed.find({rec.site.function, rec.site.node});
        if (it == r.observed.end()) continue;
        ASSERT_TRUE(rec.fs_set.has_value()) << name;
        EXPECT_TRUE(it->second.subset_of(rec.cs_merged())) << name << " line " << rec.site.line << " k=" << k;
      }
    }
  }
}
