#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/gen.hpp"
#include "support/triples.hpp"

using namespace ptwb;
using namespace ptwb::testing;

namespace {

const LocId a{10}, b{11}, g{12};

std::vector<PoIRecord> records_of(const ProgramIR& ir) {
  FisResult fis = run_fis(ir);
  return compare_program(ir, fis, run_fs(ir, fis.targets), run_cs(ir, fis.targets));
}

std::vector<PoIRecord> with_classes(const std::vector<std::pair<PrecisionClass, int>>& mix) {
  std::vector<PoIRecord> out;
  for (const auto& [c, n] : mix)
    for (int i = 0; i < n; ++i) {
      PoIRecord r;
      r.cls = c;
      out.push_back(r);
    }
  return out;
}

}  // namespace

// classify ------------------------------------------------------------------------------------

TEST(Classify, AllEqual) {
  EXPECT_EQ(classify(LocSet{a}, LocSet{a}, {LocSet{a}}), PrecisionClass::EqAll);
}

TEST(Classify, NullOnlyInFis) {
  EXPECT_EQ(classify(LocSet{kNullLoc, a}, LocSet{a}, {LocSet{a}}), PrecisionClass::FisLtFsEqCs);
}

TEST(Classify, StrictAtBothSteps) {
  EXPECT_EQ(classify(LocSet{a, b, g}, LocSet{a, b}, {LocSet{a}, LocSet{b}}), PrecisionClass::FisLtFsLtCs);
}

TEST(Classify, OnlyContextsGain) {
  EXPECT_EQ(classify(LocSet{a, b}, LocSet{a, b}, {LocSet{a}, LocSet{b}}), PrecisionClass::FisEqFsLtCs);
}

TEST(Classify, P4ThroughAllEngines) {
  ProgramIR ir = load_fixture("P4");
  std::vector<PoIRecord> rs = records_of(ir);
  const PoIRecord& r = record_at(rs, 6);
  EXPECT_EQ(names(ir, r.fis_set), (std::set<std::string>{"g:a", "g:b"}));
  EXPECT_EQ(names(ir, *r.fs_set), (std::set<std::string>{"g:a", "g:b"}));
  EXPECT_EQ(r.cls, PrecisionClass::FisEqFsLtCs);
  EXPECT_EQ(names(ir, r.cs_merged()), (std::set<std::string>{"g:a", "g:b"}));
}

TEST(Classify, OrderingViolationsAreErrors) {
  EXPECT_THROW(classify(LocSet{a}, LocSet{a, b}, {LocSet{a}}), InvariantViolation);
  EXPECT_THROW(classify(LocSet{a, b}, LocSet{a}, {LocSet{b}}), InvariantViolation);
  EXPECT_THROW(classify(LocSet{a, b}, LocSet{a, b}, {LocSet{a}, LocSet{g}}), InvariantViolation);
}

TEST(Classify, EmptySetsAreEqual) {
  EXPECT_EQ(classify(LocSet{}, LocSet{}, {LocSet{}}), PrecisionClass::EqAll);
  EXPECT_EQ(classify(LocSet{a}, LocSet{}, {LocSet{}}), PrecisionClass::FisLtFsEqCs);
}

TEST(Classify, ExactlyOnePredicateOnRandomTriples) {
  std::mt19937 rng(11);
  std::map<PrecisionClass, int> seen;
  for (int i = 0; i < 20000; ++i) {
    Triple t = random_triple(rng);
    std::array<bool, 4> defs = definitions(t), preds = predicates(t);
    EXPECT_EQ(preds, defs) << i;
    ASSERT_EQ(std::count(defs.begin(), defs.end(), true), 1) << i;
    PrecisionClass want = kDefinitionOrder[std::find(defs.begin(), defs.end(), true) - defs.begin()];
    EXPECT_EQ(classify(t), want) << i;
    ++seen[want];
  }
  // every class came up
  EXPECT_EQ(seen.size(), 4u);
}

TEST(Classify, RecordsOfRandomProgramsAreClassified) {
  for (unsigned long long seed = 0; seed < 100; ++seed) {
    ProgramIR ir = build_ir_from_text(random_program(seed));
    for (const PoIRecord& r : records_of(ir)) {
      if (r.cls == PrecisionClass::Unreachable) {
        EXPECT_FALSE(r.fs_set.has_value());
        continue;
      }
      std::vector<LocSet> cs;
      for (const auto& [c, s] : r.cs_sets) cs.push_back(s);
      int holds = pred_eq_all(r.fis_set, *r.fs_set, cs) + pred_fis_lt_fs_lt_cs(r.fis_set, *r.fs_set, cs) +
                  pred_fiseqfs_lt_cs(r.fis_set, *r.fs_set, cs) + pred_fis_lt_fseqcs(r.fis_set, *r.fs_set, cs);
      EXPECT_EQ(holds, 1) << "seed " << seed << " line " << r.site.line;
      EXPECT_EQ(r.single_location, r.fs_set->size() == 1);
    }
  }
}

// corpus_stats -----------------------------------------------------------------------------------

TEST(Stats, FixtureTotalsAreTheSumOfClassifications) {
  std::vector<PoIRecord> all;
  std::map<PrecisionClass, long long> counted;
  for (const auto& name : fixture_names())
    for (const PoIRecord& r : records_of(load_fixture(name))) {
      ++counted[r.cls];
      all.push_back(r);
    }
  StatsReport s = corpus_stats(all);
  EXPECT_EQ(s.total, static_cast<long long>(all.size()) - s.unreachable);
  for (PrecisionClass c : kClasses) EXPECT_EQ(s.count(c), counted[c]) << to_string(c);
  // P1 1, P2 1, P3 1, P4 1, P5 2, P6 1
  EXPECT_EQ(s.total, 7);
}

TEST(Stats, FiftyTwoAllEqual) {
  StatsReport s = corpus_stats(with_classes({{PrecisionClass::EqAll, 52}}));
  EXPECT_EQ(s.total, 52);
  EXPECT_EQ(count_cell(s.count(PrecisionClass::EqAll), s.total), "52 (100)");
  EXPECT_EQ(count_cell(s.count(PrecisionClass::FisLtFsEqCs), s.total), "0 (0)");
  std::ostringstream os;
  print_stats_table(os, {{"smcard", s}});
  EXPECT_NE(os.str().find("52 (100)"), std::string::npos) << os.str();
}

TEST(Stats, EmptyIsAllZero) {
  StatsReport s = corpus_stats({});
  EXPECT_EQ(s.total, 0);
  EXPECT_EQ(s.unreachable, 0);
  EXPECT_EQ(s.single_location, 0);
  for (PrecisionClass c : kClasses) EXPECT_EQ(s.count(c), 0);
  EXPECT_EQ(count_cell(0, 0), "0 (0)");
  nlohmann::json j = stats_to_json(s);
  EXPECT_EQ(j["total"], 0);
  EXPECT_EQ(j["classes"]["EQ_ALL"]["percent"], 0.0);
}

TEST(Stats, UnreachableIsCountedApart) {
  StatsReport s = corpus_stats(with_classes({{PrecisionClass::EqAll, 3}, {PrecisionClass::Unreachable, 2}}));
  EXPECT_EQ(s.total, 3);
  EXPECT_EQ(s.unreachable, 2);
  EXPECT_EQ(count_cell(s.count(PrecisionClass::EqAll), s.total), "3 (100)");
}

TEST(Stats, PercentRoundsHalfUp) {
  EXPECT_EQ(format_percent(percent_tenths(1, 16)), "6.3");   // 6.25
  EXPECT_EQ(format_percent(percent_tenths(1, 3)), "33.3");
  EXPECT_EQ(format_percent(percent_tenths(2, 3)), "66.7");
  EXPECT_EQ(format_percent(percent_tenths(1, 8)), "12.5");
  EXPECT_EQ(format_percent(percent_tenths(1, 5403)), "0");    // 0.0185
  EXPECT_EQ(format_percent(percent_tenths(3, 4000)), "0.1");  // 0.075
}

TEST(Stats, PercentagesSumToAHundred) {
  std::mt19937 rng(12);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::pair<PrecisionClass, int>> mix;
    for (PrecisionClass c : kClasses) mix.push_back({c, static_cast<int>(rng() % 50)});
    StatsReport s = corpus_stats(with_classes(mix));
    if (s.total == 0) continue;
    double sum = 0;
    for (PrecisionClass c : kClasses) sum += percent_value(s.count(c), s.total);
    EXPECT_NEAR(sum, 100.0, 0.2 + 1e-9) << i;
  }
}

TEST(Stats, PatternsWithinEqAll) {
  std::vector<PoIRecord> rs = with_classes({{PrecisionClass::EqAll, 2}, {PrecisionClass::FisLtFsEqCs, 1}});
  rs[0].pattern.pattern = Pattern::ConstPointer;
  rs[1].pattern.pattern = Pattern::FormalPointer;
  rs[2].pattern.pattern = Pattern::ConstPointer;
  rs[0].single_location = true;
  StatsReport s = corpus_stats(rs);
  EXPECT_EQ(s.eq_all_patterns[Pattern::ConstPointer], 1);
  EXPECT_EQ(s.eq_all_patterns[Pattern::FormalPointer], 1);
  EXPECT_EQ(s.eq_all_patterns[Pattern::Other], 0);
  EXPECT_EQ(s.single_location, 1);
  std::ostringstream os;
  print_pattern_table(os, {{"a-rather-long-program-name", s}});
  std::string text = os.str();
  EXPECT_NE(text.find("a-rather-long-program-name  1 (50)"), std::string::npos) << text;
}
