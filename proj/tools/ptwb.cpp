// ptwb: command-line driver for the points-to workbench.
//
// exit status: 0 ok, 1 usage or input error, 2 budget exceeded,
// 3 engine invariant broken.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ptwb/ir_print.hpp"
#include "ptwb/report.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::vector<std::string> inputs;
  std::string format = "json";
  std::string out;
  std::string entry = "main";
  long long max_iterations = 5'000'000;
  long long max_contexts = 10'000;
  std::string mode = "fis";
  int loop_bound = 2;
  bool timing = false;
  bool separate = false;
  bool dump_ir = false;
  bool dump_summaries = false;
  bool dump_contexts = false;
  std::string details;
};

ptwb::Budget budget(const Options& o) { return ptwb::Budget{o.max_iterations, o.max_contexts}; }

ptwb::ProgramIR load(const std::vector<std::string>& paths, const Options& o) {
  ptwb::SourceProgram sp;
  sp.entry_name = o.entry;
  for (const auto& p : paths) sp.files.push_back(ptwb::read_source_file(p));
  ptwb::ProgramIR ir = ptwb::build_ir(sp);
  if (o.dump_ir) ptwb::print_ir(std::cerr, ir);
  return ir;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out);
  if (!f) throw ptwb::Error("cannot write '" + o.out + "'");
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string set_text(const ptwb::ProgramIR& ir, const ptwb::LocSet& s) {
  std::string out = "{";
  for (ptwb::LocId l : s) out += (out.size() > 1 ? ", " : "") + ir.locs.name(l);
  return out + "}";
}

std::string where(const ptwb::PoISite& s) {
  return s.file + ":" + std::to_string(s.line) + ":" + std::to_string(s.col) + " " + s.text;
}

void print_diags(std::ostream& os, const std::vector<ptwb::Diagnostic>& ds) {
  for (const auto& d : ds) os << "warning: " << d.file << ":" << d.line << ": " << d.message << "\n";
}

std::string analyze(const Options& o, const std::string& mode, const ptwb::ProgramIR& ir) {
  std::ostringstream os;
  auto fis = ptwb::run_fis(ir, budget(o));
  if (mode == "fis") {
    print_diags(std::cerr, fis.diagnostics);
    if (o.format == "json") return dump(ptwb::fis_document(ir, fis));
    for (const auto& s : ptwb::enumerate_pois(ir)) os << where(s) << "  " << set_text(ir, fis.pts.get(s.pointer)) << "\n";
    return os.str();
  }
  if (mode == "fs") {
    auto fs = ptwb::run_fs(ir, fis.targets, budget(o));
    print_diags(std::cerr, fs.diagnostics);
    if (o.format == "json") return dump(ptwb::fs_document(ir, fs, o.dump_summaries));
    for (const auto& s : ptwb::enumerate_pois(ir)) {
      auto in = fs.in_at(s.function, s.node);
      os << where(s) << "  " << (in ? set_text(ir, in->get(s.pointer)) : "unreachable") << "\n";
    }
    return os.str();
  }
  auto cs = ptwb::run_cs(ir, fis.targets, budget(o));
  print_diags(std::cerr, cs.diagnostics);
  if (o.format == "json") return dump(ptwb::cs_document(ir, cs, o.dump_contexts));
  for (const auto& s : ptwb::enumerate_pois(ir)) {
    os << where(s);
    auto per = cs.in_at(s.function, s.node);
    if (per.empty()) os << "  unreachable";
    for (const auto& [c, m] : per) os << "  [" << c << "] " << set_text(ir, m.get(s.pointer));
    os << "\n";
  }
  return os.str();
}

std::string compare(const Options& o) {
  std::vector<std::vector<std::string>> programs;
  if (o.separate)
    for (const auto& p : o.inputs) programs.push_back({p});
  else
    programs.push_back(o.inputs);

  std::vector<std::pair<std::string, ptwb::StatsReport>> rows;
  json docs = json::array();
  json details = json::array();
  std::ostringstream os;
  for (const auto& files : programs) {
    ptwb::ProgramIR ir = load(files, o);
    ptwb::Comparison c = ptwb::run_comparison(ir, budget(o));
    std::string name = files.size() == 1 ? files[0] : files[0] + " (+" + std::to_string(files.size() - 1) + ")";
    rows.emplace_back(name, c.stats);
    json doc = ptwb::compare_document(ir, c, o.timing);
    for (const auto& p : doc["pois"]) details.push_back(p);
    docs.push_back(std::move(doc));
    if (o.timing && o.format != "json")
      os << name << ": fis " << c.timing.fis << " s, fs " << c.timing.fs << " s, cs " << c.timing.cs << " s\n";
  }
  if (!o.details.empty()) {
    std::ofstream f(o.details);
    if (!f) throw ptwb::Error("cannot write '" + o.details + "'");
    f << json{{"schema_version", ptwb::kSchemaVersion}, {"pois", details}}.dump(2) << "\n";
  }
  if (o.format == "json") return dump(docs.size() == 1 ? docs[0] : json{{"schema_version", ptwb::kSchemaVersion}, {"programs", docs}});
  std::ostringstream table;
  ptwb::print_stats_table(table, rows);
  table << "\n";
  ptwb::print_pattern_table(table, rows);
  return table.str() + os.str();
}

std::string recommend_text(const ptwb::Recommendation& r) {
  std::string out = std::string(ptwb::to_string(r.analysis)) + "\n";
  for (const auto& reason : r.reasons) out += "  " + reason + "\n";
  return out;
}

int run(int argc, char** argv) {
  Options o;
  CLI::App app{"points-to analysis workbench"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--out", o.out, "write the report here instead of stdout");
  app.add_option("--max-iterations", o.max_iterations, "node-visit budget per engine")->check(CLI::PositiveNumber);
  app.add_option("--max-contexts", o.max_contexts, "context budget of the CS engine")->check(CLI::PositiveNumber);
  app.add_option("--entry", o.entry, "entry function");
  app.add_flag("--dump-ir", o.dump_ir, "print the lowered program on stderr");

  auto inputs = [&](CLI::App* sub) { sub->add_option("files", o.inputs, "input .mc files")->required()->check(CLI::ExistingFile); };
  auto* an = app.add_subcommand("analyze", "run one analysis");
  an->add_option("--mode", o.mode, "fis, fs or cs")->check(CLI::IsMember({"fis", "fs", "cs"}));
  an->add_flag("--dump-summaries", o.dump_summaries, "include FS function summaries");
  an->add_flag("--dump-contexts", o.dump_contexts, "include CS context values");
  inputs(an);
  auto* cmp = app.add_subcommand("compare", "run all three analyses and bucket every dereference");
  cmp->add_flag("--timing", o.timing, "report wall time per analysis");
  cmp->add_flag("--separate", o.separate, "treat each file as its own program");
  cmp->add_option("--details", o.details, "write the per-dereference records here");
  inputs(cmp);
  auto* pat = app.add_subcommand("patterns", "label dereferences with code patterns");
  inputs(pat);
  auto* rec = app.add_subcommand("recommend", "suggest the cheapest sufficient analysis");
  inputs(rec);
  auto* orc = app.add_subcommand("oracle", "enumerate bounded concrete executions");
  orc->add_option("--loop-bound", o.loop_bound, "loop and recursion bound")->check(CLI::NonNegativeNumber);
  inputs(orc);
  auto* aut = app.add_subcommand("auto", "recommend, then run only the recommended analysis");
  aut->add_flag("--dump-summaries", o.dump_summaries, "include FS function summaries");
  aut->add_flag("--dump-contexts", o.dump_contexts, "include CS context values");
  inputs(aut);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*cmp) {
      emit(o, compare(o));
      return 0;
    }
    ptwb::ProgramIR ir = load(o.inputs, o);
    if (*an) {
      emit(o, analyze(o, o.mode, ir));
    } else if (*pat) {
      json doc = ptwb::patterns_document(ir);
      if (o.format == "json") {
        emit(o, dump(doc));
      } else {
        std::ostringstream os;
        for (const auto& p : doc["pois"])
          os << p["file"].get<std::string>() << ":" << p["line"] << ":" << p["col"] << " " << p["text"].get<std::string>()
             << "  " << p["pattern"].get<std::string>() << "\n";
        emit(o, os.str());
      }
    } else if (*rec) {
      auto r = ptwb::recommend(ir);
      emit(o, o.format == "json" ? dump(ptwb::recommend_document(ir, r)) : recommend_text(r));
    } else if (*orc) {
      auto r = ptwb::interpret_all(ir, o.loop_bound);
      if (o.format == "json") {
        emit(o, dump(ptwb::oracle_document(ir, r, o.loop_bound)));
      } else {
        std::ostringstream os;
        for (const auto& s : ptwb::enumerate_pois(ir)) {
          auto it = r.observed.find({s.function, s.node});
          os << where(s) << "  " << (it == r.observed.end() ? "{}" : set_text(ir, it->second)) << "\n";
        }
        os << r.paths << " path(s), " << r.truncated << " truncated\n";
        emit(o, os.str());
      }
    } else if (*aut) {
      auto r = ptwb::recommend(ir);
      std::cerr << "recommended: " << recommend_text(r);
      std::string mode = r.analysis == ptwb::Analysis::FIS ? "fis" : r.analysis == ptwb::Analysis::FS ? "fs" : "cs";
      std::string text = analyze(o, mode, ir);
      if (o.format == "json") {
        json doc = json::parse(text);
        doc["recommendation"] = ptwb::recommendation_to_json(r);
        text = dump(doc);
      }
      emit(o, text);
    }
    return 0;
  } catch (const std::exception& e) {
    int rc = ptwb::exit_code(e);
    std::cerr << (rc == 3 ? "internal error: " : "error: ") << e.what() << "\n";
    return rc;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
