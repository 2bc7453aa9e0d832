#pragma once

// Pipelines behind the command-line subcommands and their JSON documents.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptwb/andersen.hpp"
#include "ptwb/comparator.hpp"
#include "ptwb/context_sensitive.hpp"
#include "ptwb/flow_sensitive.hpp"
#include "ptwb/ir.hpp"
#include "ptwb/lower.hpp"
#include "ptwb/oracle.hpp"
#include "ptwb/patterns.hpp"

namespace ptwb {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

inline json poi_to_json(const ProgramIR& ir, const PoISite& s) {
  const char* kind = s.kind == PoIKind::Load ? "load" : s.kind == PoIKind::Store ? "store" : "indirect-call";
  return json{{"file", s.file},          {"line", s.line},
              {"col", s.col},            {"level", s.level},
              {"function", ir.function(s.function).name},
              {"text", s.text},          {"pointer", ir.locs.name(s.pointer)},
              {"kind", kind},            {"literal_address", s.literal_address}};
}

inline json diagnostics_to_json(const std::vector<Diagnostic>& ds) {
  json out = json::array();
  for (const Diagnostic& d : ds)
    out.push_back({{"kind", d.kind}, {"file", d.file}, {"line", d.line}, {"message", d.message}});
  return out;
}

inline json header(const ProgramIR& ir, const std::string& command) {
  return json{{"schema_version", kSchemaVersion}, {"command", command}, {"files", ir.files},
              {"entry", ir.function(ir.entry).name}};
}

inline json summary_to_json(const ProgramIR& ir, const FunctionSummary& s) {
  json kill = json::array(), mod = json::array();
  for (LocId k : s.kill) kill.push_back(ir.locs.name(k));
  for (LocId k : s.mod) mod.push_back(ir.locs.name(k));
  return json{{"gen", to_json(s.gen, ir.locs)}, {"kill", kill}, {"mod", mod}, {"ret", set_to_json(s.ret, ir.locs)}};
}

inline json fis_document(const ProgramIR& ir, const FisResult& r) {
  json j = header(ir, "analyze");
  j["mode"] = "fis";
  j["points_to"] = to_json(r.pts, ir.locs);
  json pois = json::array();
  for (const PoISite& s : enumerate_pois(ir)) {
    json p = poi_to_json(ir, s);
    p["set"] = set_to_json(r.pts.get(s.pointer), ir.locs);
    pois.push_back(std::move(p));
  }
  j["pois"] = pois;
  json edges = json::array();
  for (const PcgEdge& e : call_edges(ir, r.targets))
    edges.push_back({{"caller", ir.function(e.caller).name}, {"node", e.call}, {"callee", ir.function(e.callee).name}});
  j["call_edges"] = edges;
  j["diagnostics"] = diagnostics_to_json(r.diagnostics);
  return j;
}

inline json fs_document(const ProgramIR& ir, const FsResult& r, bool with_summaries) {
  json j = header(ir, "analyze");
  j["mode"] = "fs";
  json pois = json::array();
  for (const PoISite& s : enumerate_pois(ir)) {
    json p = poi_to_json(ir, s);
    FlowValue in = r.in_at(s.function, s.node);
    p["reachable"] = in.has_value();
    p["set"] = in ? set_to_json(in->get(s.pointer), ir.locs) : json::array();
    pois.push_back(std::move(p));
  }
  j["pois"] = pois;
  json fns = json::object();
  for (const FunctionIR& f : ir.functions) {
    auto fi = static_cast<std::size_t>(f.id);
    json e;
    e["analyzed"] = static_cast<bool>(r.analyzed[fi]);
    if (r.boundary[fi]) e["boundary"] = to_json(*r.boundary[fi], ir.locs);
    if (with_summaries && r.summaries[fi]) e["summary"] = summary_to_json(ir, *r.summaries[fi]);
    fns[f.name] = e;
  }
  j["functions"] = fns;
  j["diagnostics"] = diagnostics_to_json(r.diagnostics);
  return j;
}

inline json cs_document(const ProgramIR& ir, const CsResult& r, bool with_contexts) {
  json j = header(ir, "analyze");
  j["mode"] = "cs";
  json pois = json::array();
  for (const PoISite& s : enumerate_pois(ir)) {
    json p = poi_to_json(ir, s);
    json per = json::array();
    std::vector<LocSet> sets;
    for (const auto& [c, m] : r.in_at(s.function, s.node)) {
      per.push_back({{"context", c}, {"set", set_to_json(m.get(s.pointer), ir.locs)}});
      sets.push_back(m.get(s.pointer));
    }
    p["contexts"] = per;
    p["reachable"] = !sets.empty();
    p["merged"] = set_to_json(merge_poi_contexts(sets), ir.locs);
    pois.push_back(std::move(p));
  }
  j["pois"] = pois;
  json fns = json::object();
  for (const FunctionIR& f : ir.functions) {
    auto ids = r.contexts_of(f.id);
    json e{{"contexts", ids.size()}};
    if (with_contexts) {
      json vals = json::array();
      for (ContextId c : ids)
        vals.push_back({{"id", c}, {"value", to_json(r.contexts[static_cast<std::size_t>(c)].value, ir.locs)}});
      e["values"] = vals;
    }
    fns[f.name] = e;
  }
  j["functions"] = fns;
  j["contexts_created"] = r.created;
  j["diagnostics"] = diagnostics_to_json(r.diagnostics);
  return j;
}

struct TimingReport {
  double fis = 0, fs = 0, cs = 0;  // seconds
};

struct Comparison {
  FisResult fis;
  FsResult fs;
  CsResult cs;
  std::vector<PoIRecord> records;
  StatsReport stats;
  Recommendation recommendation;
  TimingReport timing;
};

/// Runs the three engines one after the other on the same IR.
inline Comparison run_comparison(const ProgramIR& ir, const Budget& budget = {}) {
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  Comparison c;
  auto t0 = clock::now();
  c.fis = run_fis(ir, budget);
  auto t1 = clock::now();
  c.fs = run_fs(ir, c.fis.targets, budget);
  auto t2 = clock::now();
  c.cs = run_cs(ir, c.fis.targets, budget);
  auto t3 = clock::now();
  c.timing = {secs(t0, t1), secs(t1, t2), secs(t2, t3)};
  c.records = compare_program(ir, c.fis, c.fs, c.cs);
  c.stats = corpus_stats(c.records);
  c.recommendation = recommend(ir);
  return c;
}

inline json record_to_json(const ProgramIR& ir, const PoIRecord& r) {
  json p = poi_to_json(ir, r.site);
  p["class"] = to_string(r.cls);
  p["pattern"] = to_string(r.pattern.pattern);
  if (r.pattern.pattern == Pattern::FormalPointer) {
    p["uniform_actuals"] = r.pattern.uniform_actuals;
    p["reassigned_in_callee"] = r.pattern.reassigned_in_callee;
  }
  p["fis"] = set_to_json(r.fis_set, ir.locs);
  p["fs"] = r.fs_set ? set_to_json(*r.fs_set, ir.locs) : json(nullptr);
  json cs = json::array();
  for (const auto& [c, s] : r.cs_sets) cs.push_back({{"context", c}, {"set", set_to_json(s, ir.locs)}});
  p["cs"] = cs;
  p["cs_merged"] = set_to_json(r.cs_merged(), ir.locs);
  p["single_location"] = r.single_location;
  return p;
}

inline json recommendation_to_json(const Recommendation& r) {
  return json{{"analysis", to_string(r.analysis)}, {"reasons", r.reasons}};
}

inline json compare_document(const ProgramIR& ir, const Comparison& c, bool with_timing) {
  json j = header(ir, "compare");
  j["stats"] = stats_to_json(c.stats);
  json pois = json::array();
  for (const PoIRecord& r : c.records) pois.push_back(record_to_json(ir, r));
  j["pois"] = pois;
  j["recommendation"] = recommendation_to_json(c.recommendation);
  if (with_timing) j["timing"] = {{"fis", c.timing.fis}, {"fs", c.timing.fs}, {"cs", c.timing.cs}};
  return j;
}

inline json patterns_document(const ProgramIR& ir) {
  json j = header(ir, "patterns");
  auto sites = enumerate_pois(ir);
  auto labels = label_all(ir, sites);
  json pois = json::array();
  std::map<Pattern, long long> counts;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    json p = poi_to_json(ir, sites[i]);
    p["pattern"] = to_string(labels[i].pattern);
    if (labels[i].pattern == Pattern::FormalPointer) {
      p["uniform_actuals"] = labels[i].uniform_actuals;
      p["reassigned_in_callee"] = labels[i].reassigned_in_callee;
    }
    ++counts[labels[i].pattern];
    pois.push_back(std::move(p));
  }
  j["pois"] = pois;
  json dist = json::object();
  auto total = static_cast<long long>(sites.size());
  for (Pattern p : kAllPatterns)
    dist[to_string(p)] = {{"count", counts[p]}, {"percent", percent_value(counts[p], total)}};
  j["distribution"] = dist;
  return j;
}

inline json recommend_document(const ProgramIR& ir, const Recommendation& r) {
  json j = header(ir, "recommend");
  j["recommendation"] = recommendation_to_json(r);
  return j;
}

inline json oracle_document(const ProgramIR& ir, const OracleResult& r, int loop_bound) {
  json j = header(ir, "oracle");
  j["loop_bound"] = loop_bound;
  j["paths"] = r.paths;
  j["truncated_paths"] = r.truncated;
  json pois = json::array();
  for (const PoISite& s : enumerate_pois(ir)) {
    json p = poi_to_json(ir, s);
    auto it = r.observed.find({s.function, s.node});
    p["observed"] = it == r.observed.end() ? json::array() : set_to_json(it->second, ir.locs);
    pois.push_back(std::move(p));
  }
  j["pois"] = pois;
  return j;
}

}  // namespace ptwb
