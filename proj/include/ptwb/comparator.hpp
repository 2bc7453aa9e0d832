#pragma once

// Buckets every dereference point by how the FIS, FS and per-context CS sets
// relate, and aggregates the buckets over a corpus.

#include <array>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptwb/andersen.hpp"
#include "ptwb/context_sensitive.hpp"
#include "ptwb/error.hpp"
#include "ptwb/flow_sensitive.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/patterns.hpp"

namespace ptwb {

enum class PrecisionClass { EqAll, FisLtFsLtCs, FisEqFsLtCs, FisLtFsEqCs, Unreachable };

inline constexpr std::array<PrecisionClass, 4> kClasses = {PrecisionClass::EqAll, PrecisionClass::FisEqFsLtCs,
                                                          PrecisionClass::FisLtFsEqCs, PrecisionClass::FisLtFsLtCs};

inline const char* to_string(PrecisionClass c) {
  switch (c) {
    case PrecisionClass::EqAll: return "EQ_ALL";
    case PrecisionClass::FisLtFsLtCs: return "FIS_LT_FS_LT_CS";
    case PrecisionClass::FisEqFsLtCs: return "FISEQFS_LT_CS";
    case PrecisionClass::FisLtFsEqCs: return "FIS_LT_FSEQCS";
    case PrecisionClass::Unreachable: return "UNREACHABLE";
  }
  return "?";
}

/// Column headings of the text table.
inline const char* heading(PrecisionClass c) {
  switch (c) {
    case PrecisionClass::EqAll: return "FIS=FS,FS=CS";
    case PrecisionClass::FisLtFsLtCs: return "FIS<FS,FS<CS";
    case PrecisionClass::FisEqFsLtCs: return "FIS=FS,FS<CS";
    case PrecisionClass::FisLtFsEqCs: return "FIS<FS,FS=CS";
    case PrecisionClass::Unreachable: return "Unreachable";
  }
  return "?";
}

// The four predicates, as stated over the sets.

inline bool pred_eq_all(const LocSet& fis, const LocSet& fs, const std::vector<LocSet>& cs) {
  if (fis != fs) return false;
  for (const LocSet& c : cs)
    if (c != fs) return false;
  return true;
}

inline bool pred_fis_lt_fs_lt_cs(const LocSet& fis, const LocSet& fs, const std::vector<LocSet>& cs) {
  if (!fs.strict_subset_of(fis)) return false;
  for (const LocSet& c : cs)
    if (c.strict_subset_of(fs)) return true;
  return false;
}

inline bool pred_fiseqfs_lt_cs(const LocSet& fis, const LocSet& fs, const std::vector<LocSet>& cs) {
  if (fis != fs) return false;
  for (const LocSet& c : cs)
    if (c.strict_subset_of(fs)) return true;
  return false;
}

inline bool pred_fis_lt_fseqcs(const LocSet& fis, const LocSet& fs, const std::vector<LocSet>& cs) {
  if (!fs.strict_subset_of(fis)) return false;
  for (const LocSet& c : cs)
    if (c != fs) return false;
  return true;
}

/// Throws InvariantViolation unless every CS set is within FS and FS within FIS.
inline PrecisionClass classify(const LocSet& fis, const LocSet& fs, const std::vector<LocSet>& cs) {
  if (!fs.subset_of(fis)) throw InvariantViolation("FS set is not contained in the FIS set");
  for (const LocSet& c : cs)
    if (!c.subset_of(fs)) throw InvariantViolation("a CS set is not contained in the FS set");
  if (pred_eq_all(fis, fs, cs)) return PrecisionClass::EqAll;
  if (pred_fis_lt_fs_lt_cs(fis, fs, cs)) return PrecisionClass::FisLtFsLtCs;
  if (pred_fiseqfs_lt_cs(fis, fs, cs)) return PrecisionClass::FisEqFsLtCs;
  if (pred_fis_lt_fseqcs(fis, fs, cs)) return PrecisionClass::FisLtFsEqCs;
  throw InvariantViolation("no precision class applies");
}

struct PoIRecord {
  PoISite site;
  LocSet fis_set;
  std::optional<LocSet> fs_set;  // empty when FS never reached the node
  std::vector<std::pair<ContextId, LocSet>> cs_sets;
  PrecisionClass cls = PrecisionClass::Unreachable;
  PatternLabel pattern;
  bool single_location = false;

  LocSet cs_merged() const {
    std::vector<LocSet> v;
    for (const auto& [c, s] : cs_sets) v.push_back(s);
    return merge_poi_contexts(v);
  }
};

/// Gathers the three engines' sets at every dereference point.
inline std::vector<PoIRecord> compare_program(const ProgramIR& ir, const FisResult& fis, const FsResult& fs,
                                              const CsResult& cs) {
  std::vector<PoISite> sites = enumerate_pois(ir);
  std::vector<PatternLabel> labels = label_all(ir, sites);
  std::vector<PoIRecord> out;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const PoISite& s = sites[i];
    PoIRecord r;
    r.site = s;
    r.pattern = labels[i];
    r.fis_set = fis.pts.get(s.pointer);
    if (FlowValue in = fs.in_at(s.function, s.node)) {
      r.fs_set = in->get(s.pointer);
      for (const auto& [c, m] : cs.in_at(s.function, s.node)) r.cs_sets.emplace_back(c, m.get(s.pointer));
      // FS reached the node but no context did: CS knows nothing flows here
      if (r.cs_sets.empty()) r.cs_sets.emplace_back(-1, LocSet{});
      std::vector<LocSet> sets;
      for (const auto& [c, set] : r.cs_sets) sets.push_back(set);
      try {
        r.cls = classify(r.fis_set, *r.fs_set, sets);
      } catch (const InvariantViolation& e) {
        throw InvariantViolation(s.file + ":" + std::to_string(s.line) + ": " + s.text + ": " + e.what());
      }
      r.single_location = r.fs_set->size() == 1;
    }
    out.push_back(std::move(r));
  }
  return out;
}

struct StatsReport {
  long long total = 0;  // classified dereference points
  long long unreachable = 0;
  std::map<PrecisionClass, long long> counts;
  long long single_location = 0;
  std::map<Pattern, long long> eq_all_patterns;

  long long count(PrecisionClass c) const {
    auto it = counts.find(c);
    return it == counts.end() ? 0 : it->second;
  }
};

inline StatsReport corpus_stats(const std::vector<PoIRecord>& records) {
  StatsReport s;
  for (PrecisionClass c : kClasses) s.counts[c] = 0;
  for (Pattern p : kAllPatterns) s.eq_all_patterns[p] = 0;
  for (const PoIRecord& r : records) {
    if (r.cls == PrecisionClass::Unreachable) {
      ++s.unreachable;
      continue;
    }
    ++s.total;
    ++s.counts[r.cls];
    if (r.single_location) ++s.single_location;
    if (r.cls == PrecisionClass::EqAll) ++s.eq_all_patterns[r.pattern.pattern];
  }
  return s;
}

/// Percentage in tenths, rounded half up.
inline long long percent_tenths(long long count, long long total) {
  if (total <= 0) return 0;
  return (count * 2000 + total) / (2 * total);
}

inline std::string format_percent(long long tenths) {
  std::string out = std::to_string(tenths / 10);
  if (tenths % 10) out += "." + std::to_string(tenths % 10);
  return out;
}

/// "52 (100)" style cell.
inline std::string count_cell(long long count, long long total) {
  return std::to_string(count) + " (" + format_percent(percent_tenths(count, total)) + ")";
}

inline double percent_value(long long count, long long total) {
  return static_cast<double>(percent_tenths(count, total)) / 10.0;
}

inline nlohmann::json stats_to_json(const StatsReport& s) {
  nlohmann::json j;
  j["total"] = s.total;
  j["unreachable"] = s.unreachable;
  j["single_location"] = s.single_location;
  nlohmann::json classes = nlohmann::json::object();
  for (PrecisionClass c : kClasses)
    classes[to_string(c)] = {{"count", s.count(c)}, {"percent", percent_value(s.count(c), s.total)}};
  j["classes"] = classes;
  long long eq = s.count(PrecisionClass::EqAll);
  nlohmann::json pats = nlohmann::json::object();
  for (Pattern p : kAllPatterns) {
    long long n = s.eq_all_patterns.count(p) ? s.eq_all_patterns.at(p) : 0;
    pats[to_string(p)] = {{"count", n}, {"percent", percent_value(n, eq)}};
  }
  j["eq_all_patterns"] = pats;
  return j;
}

/// One row per program plus a total row.
inline void print_stats_table(std::ostream& os, const std::vector<std::pair<std::string, StatsReport>>& rows) {
  std::vector<std::string> head = {"Program", "Total PoIs"};
  for (PrecisionClass c : kClasses) head.push_back(heading(c));
  head.push_back("Unreachable");
  head.push_back("Single loc");
  std::vector<std::vector<std::string>> cells{head};
  StatsReport sum;
  for (const auto& [name, s] : rows) {
    std::vector<std::string> row = {name, std::to_string(s.total)};
    for (PrecisionClass c : kClasses) row.push_back(count_cell(s.count(c), s.total));
    row.push_back(std::to_string(s.unreachable));
    row.push_back(std::to_string(s.single_location));
    cells.push_back(std::move(row));
    sum.total += s.total;
    sum.unreachable += s.unreachable;
    sum.single_location += s.single_location;
    for (PrecisionClass c : kClasses) sum.counts[c] += s.count(c);
  }
  if (rows.size() > 1) {
    std::vector<std::string> row = {"Total", std::to_string(sum.total)};
    for (PrecisionClass c : kClasses) row.push_back(count_cell(sum.count(c), sum.total));
    row.push_back(std::to_string(sum.unreachable));
    row.push_back(std::to_string(sum.single_location));
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << "  ";
      if (i == 0)
        os << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      else
        os << std::right << std::setw(static_cast<int>(width[i])) << row[i];
    }
    os << "\n";
  }
  os << std::left;
}

/// Pattern distribution among the EQ_ALL points, one row per program.
inline void print_pattern_table(std::ostream& os, const std::vector<std::pair<std::string, StatsReport>>& rows) {
  std::size_t w = std::string("Program").size();
  for (const auto& row : rows) w = std::max(w, row.first.size());
  os << std::left << std::setw(static_cast<int>(w)) << "Program";
  for (Pattern p : kAllPatterns) os << "  " << std::setw(16) << to_string(p);
  os << "\n";
  for (const auto& [name, s] : rows) {
    long long eq = s.count(PrecisionClass::EqAll);
    os << std::setw(static_cast<int>(w)) << name;
    for (Pattern p : kAllPatterns) {
      long long n = s.eq_all_patterns.count(p) ? s.eq_all_patterns.at(p) : 0;
      os << "  " << std::setw(16) << count_cell(n, eq);
    }
    os << "\n";
  }
}

}  // namespace ptwb
