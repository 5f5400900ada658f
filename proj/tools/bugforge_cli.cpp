#include "bugforge/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace bugforge;
using nlohmann::json;

namespace {

struct AnalyzeFlags {
  std::vector<std::string> summaries;
  int max_depth = TraceConfig{}.max_depth;
  std::size_t max_paths = TraceConfig{}.max_paths;
  std::string sink_classes;
  bool json_only = false;
  bool timings = false;

  void attach(CLI::App *app) {
    app->add_option("--summaries", summaries, "Extra summary file, merged over the built-in C library table")
        ->check(CLI::ExistingFile);
    app->add_option("--max-depth", max_depth, "Backward trace depth budget")->check(CLI::PositiveNumber);
    app->add_option("--max-paths", max_paths, "Paths kept per sink")->check(CLI::PositiveNumber);
    app->add_option("--sink-classes", sink_classes, "Comma separated sink classes to keep");
    app->add_flag("--json-only", json_only, "Print JSON to stdout and nothing else");
    app->add_flag("--timings", timings, "Record per-phase wall time in the report");
  }

  AnalyzeOptions options() const {
    AnalyzeOptions o;
    for (const auto &s : summaries)
      o.summary_files.emplace_back(s);
    o.trace.max_depth = max_depth;
    o.trace.max_paths = max_paths;
    o.timings = timings;
    std::stringstream in(sink_classes);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty())
        continue;
      auto c = parse_vuln_class(item);
      if (!c)
        throw PipelineError(exit_code::kFailure, "unknown sink class '" + item + "'");
      o.sink_classes.insert(*c);
    }
    return o;
  }
};

std::string where(const Location &l) { return l.path + ":" + std::to_string(l.line); }

void print_report(const CorpusReport &r) {
  std::printf("corpus           %s\n", r.corpus.c_str());
  std::printf("files            %zu (%zu lines of code, %zu skipped regions)\n", r.files, r.lines_of_code,
              r.skipped_regions);
  std::printf("sources          %zu\n", r.sources_found);
  std::printf("sinks            %zu\n", r.sinks_found);
  std::printf("unique pairs     %zu\n", r.unique_pairs);
  std::printf("dataflow paths   %zu\n", r.dataflow_paths);
  for (const auto &p : r.per_pair) {
    std::printf("  %s %s -> %s %s arg %d [%s], %zu paths\n", p.source_callee.c_str(), where(p.source).c_str(),
                p.sink_callee.c_str(), where(p.sink).c_str(), p.sink_arg, p.vuln_class.c_str(), p.paths);
    for (const auto &g : p.guards)
      std::printf("    guard %s %s %s%s\n", where(g.location).c_str(), g.classification.c_str(), g.polarity.c_str(),
                  g.bugdoorable ? " bugdoorable" : (" skipped: " + g.skip_reason).c_str());
  }
  for (const auto &t : r.truncation_flags)
    std::printf("  truncated %s %s: %s\n", t.callee.c_str(), where(t.sink).c_str(), t.reason.c_str());
  if (r.timings)
    std::printf("timings          importing %.3fs, summarizing %.3fs, finding paths %.3fs, guards %.3fs\n",
                r.timings->importing, r.timings->summarizing, r.timings->finding_paths, r.timings->guards);
}

int cmd_analyze(const fs::path &corpus, const AnalyzeFlags &flags, const fs::path &out) {
  Analysis a = analyze_corpus(corpus, flags.options());
  json j = to_json(a.report);
  write_file_atomic(out, dump_json(j));
  if (flags.json_only) {
    std::cout << dump_json(j);
  } else {
    print_report(a.report);
    std::printf("wrote %s\n", out.string().c_str());
  }
  return exit_code::kOk;
}

std::string skip_summary(const Analysis &a, const std::vector<SkippedSite> &skipped) {
  std::string s;
  for (const auto &k : skipped)
    s += "  " + where(locate(a.graph, k.guard.condition_node, a.root)) + " " + to_string(k.reason) + ": " + k.detail +
         "\n";
  return s;
}

int cmd_list(const fs::path &corpus, const AnalyzeFlags &flags) {
  Analysis a = analyze_corpus(corpus, flags.options());
  std::vector<SkippedSite> skipped;
  std::vector<Candidate> candidates = find_candidates(a, &skipped);
  json j = candidates_json(a, candidates, skipped);
  if (flags.json_only) {
    std::cout << dump_json(j);
    return exit_code::kOk;
  }
  auto at = [](const json &l) { return l["path"].get<std::string>() + ":" + std::to_string(l["line"].get<int>()); };
  for (const auto &s : j["bugdoorable"]) {
    std::printf("%s -> %s %s (%s)\n", at(s["location"]).c_str(), s["sink"].get<std::string>().c_str(),
                at(s["sink_location"]).c_str(), s["kind"].get<std::string>().c_str());
    for (const auto &[cls, n] : s["instrumentations"].items())
      std::printf("  %-28s %d\n", cls.c_str(), n.get<int>());
  }
  if (!skipped.empty())
    std::printf("skipped:\n%s", skip_summary(a, skipped).c_str());
  return exit_code::kOk;
}

int cmd_insert(const fs::path &corpus, const AnalyzeFlags &flags, std::uint64_t seed, int count, const fs::path &out) {
  if (count <= 0)
    return exit_code::kOk;
  Analysis a = analyze_corpus(corpus, flags.options());
  std::vector<SkippedSite> skipped;
  std::vector<Candidate> candidates = find_candidates(a, &skipped);
  if (candidates.empty())
    throw PipelineError(exit_code::kNothingBugdoorable, "no bugdoorable site\n" + skip_summary(a, skipped));
  json written = json::array();
  for (int i = 0; i < count; ++i) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(i);
    Variant v = make_variant(a, candidates, s);
    fs::path dir = out / std::to_string(s);
    write_variant(a, v, dir);
    written.push_back({{"seed", s}, {"dir", dir.generic_string()}, {"ground_truth", v.ground_truth}});
    if (!flags.json_only)
      std::printf("%s: %s, %s\n", dir.string().c_str(), to_string(v.record.plan.cls),
                  v.record.plan.description.c_str());
  }
  if (flags.json_only)
    std::cout << dump_json(written);
  return exit_code::kOk;
}

int cmd_verify(const fs::path &variant, const fs::path &inputs, const VerifyOptions &options, bool json_only) {
  std::vector<InputVerdict> verdicts = verify_variant(variant, inputs, options);
  if (json_only) {
    std::cout << dump_json(verdicts_json(verdicts));
    return exit_code::kOk;
  }
  for (const auto &v : verdicts)
    std::printf("%-24s %s\n", v.input.c_str(), to_string(v.verdict));
  return exit_code::kOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Taint-style bug insertion for C corpora"};
  app.require_subcommand(1);

  AnalyzeFlags flags;
  std::string corpus, out, variant, inputs, compiler = "gcc", harness, original;
  std::uint64_t seed = 1;
  int count = 1;
  bool no_sanitize = false;
  int timeout = 20;
  std::vector<std::string> cflags;

  auto *analyze = app.add_subcommand("analyze", "Find source to sink flows and their guards; writes report.json");
  analyze->add_option("corpus", corpus, "Directory of .c/.i files")->required();
  analyze->add_option("--out", out, "Report path")->default_str("report.json");
  flags.attach(analyze);

  auto *list = app.add_subcommand("list", "List bugdoorable sites and applicable instrumentations");
  list->add_option("corpus", corpus, "Directory of .c/.i files")->required();
  flags.attach(list);

  auto *insert = app.add_subcommand("insert", "Write instrumented corpus variants with ground truth");
  insert->add_option("corpus", corpus, "Directory of .c/.i files")->required();
  insert->add_option("--seed", seed, "First seed")->envname("BUGFORGE_SEED");
  insert->add_option("--count", count, "Number of variants")->check(CLI::NonNegativeNumber);
  insert->add_option("--out", out, "Output directory")->default_str("out");
  flags.attach(insert);

  auto *verify = app.add_subcommand("verify", "Build original and variant and compare them on inputs");
  verify->add_option("variant", variant, "Variant directory written by insert")->required()->check(CLI::ExistingDirectory);
  verify->add_option("inputs", inputs, "Directory of input files")->required()->check(CLI::ExistingDirectory);
  verify->add_option("--compiler", compiler, "C compiler");
  verify->add_option("--harness", harness, "Directory of extra sources linked into both builds");
  verify->add_option("--original", original, "Original corpus; defaults to the one named in ground_truth.json");
  verify->add_option("--timeout", timeout, "Seconds per run")->check(CLI::PositiveNumber);
  verify->add_flag("--no-sanitize", no_sanitize, "Build without AddressSanitizer");
  verify->add_flag("--json-only", flags.json_only, "Print JSON to stdout and nothing else");

  auto *preprocess = app.add_subcommand("preprocess", "Expand .c files into .i files with an external compiler");
  preprocess->add_option("corpus", corpus, "Directory of .c files")->required()->check(CLI::ExistingDirectory);
  preprocess->add_option("--out", out, "Output directory")->required();
  preprocess->add_option("--compiler", compiler, "C compiler");
  preprocess->add_option("--cflag", cflags, "Extra compiler flag, repeatable")->allow_extra_args(false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze)
      return cmd_analyze(corpus, flags, out.empty() ? "report.json" : out);
    if (*list)
      return cmd_list(corpus, flags);
    if (*insert)
      return cmd_insert(corpus, flags, seed, count, out.empty() ? "out" : out);
    if (*verify) {
      VerifyOptions o;
      o.compiler = compiler;
      if (!harness.empty())
        o.harness = harness;
      if (!original.empty())
        o.original = original;
      o.sanitize = !no_sanitize;
      o.timeout_seconds = timeout;
      return cmd_verify(variant, inputs, o, flags.json_only);
    }
    if (*preprocess) {
      for (const auto &p : preprocess_corpus(corpus, out, compiler, cflags))
        std::printf("%s\n", p.string().c_str());
      return exit_code::kOk;
    }
  } catch (const PipelineError &e) {
    std::fprintf(stderr, "bugforge: %s\n", e.what());
    return e.code;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "bugforge: %s\n", e.what());
    return exit_code::kFailure;
  }
  return exit_code::kOk;
}
