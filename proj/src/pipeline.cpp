#include "bugforge/pipeline.hpp"

#include "bugforge/frontend.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

namespace bugforge {

namespace fs = std::filesystem;

std::vector<fs::path> corpus_files(const fs::path &root) {
  std::vector<fs::path> out;
  if (!fs::is_directory(root))
    return out;
  for (const auto &e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file())
      continue;
    auto ext = e.path().extension();
    if (ext == ".c" || ext == ".i")
      out.push_back(e.path().lexically_relative(root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

class Stopwatch {
public:
  double lap() {
    auto now = std::chrono::steady_clock::now();
    double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

SummaryMap load_summaries(const AnalyzeOptions &options, std::vector<std::string> &warnings) {
  try {
    SummaryLoad all = parse_summaries(builtin_summaries(), "glibc.summ");
    for (const auto &f : options.summary_files) {
      if (!fs::is_regular_file(f))
        throw PipelineError(exit_code::kSummaryParse, "cannot read summary file " + f.string());
      merge_summaries(all, load_external_summaries(f));
    }
    warnings = all.warnings;
    return all.summaries;
  } catch (const SummaryParseError &e) {
    throw PipelineError(exit_code::kSummaryParse, e.what());
  }
}

void keep_classes(TaintResult &t, const std::set<VulnClass> &classes) {
  if (classes.empty())
    return;
  auto drop = [&](const SinkSite &s) { return !classes.count(s.vuln_class); };
  std::erase_if(t.sinks, drop);
  std::erase_if(t.truncated, drop);
  std::erase_if(t.paths, [&](const DataFlowPath &p) { return drop(p.sink); });
  std::erase_if(t.pairs, [&](const SourceSinkPair &p) { return drop(p.sink); });
  if (!classes.count(VulnClass::FormatString)) {
    t.passthroughs.clear();
    t.passthrough_paths.clear();
  }
}

} // namespace

Analysis analyze_corpus(const fs::path &root, const AnalyzeOptions &options) {
  Analysis a;
  a.root = root;
  a.files = corpus_files(root);
  if (a.files.empty())
    throw PipelineError(exit_code::kEmptyCorpus, "no .c or .i files under " + root.string());
  SummaryMap summaries = load_summaries(options, a.summary_warnings);

  Stopwatch clock;
  PhaseTimings t;
  std::vector<TranslationUnit> units;
  for (const auto &rel : a.files) {
    fs::path p = root / rel;
    std::string text = read_file(p);
    a.texts[p.generic_string()] = text;
    units.push_back(parse_unit(std::move(text), p));
  }
  a.graph = build_cpg(std::move(units));
  t.importing = clock.lap();
  a.interproc = run_interproc(a.graph, summaries);
  t.summarizing = clock.lap();
  a.taint = run_taint(a.graph, a.interproc, options.trace);
  keep_classes(a.taint, options.sink_classes);
  t.finding_paths = clock.lap();

  for (const auto &pair : a.taint.pairs) {
    AnalyzedPair ap;
    ap.pair = pair;
    std::set<NodeId> seen;
    for (const auto &path : pair.paths) {
      PathGuards pg = analyze_guards(a.graph, path, options.corridor_limit);
      for (NodeId n : pg.corridor.nodes())
        ap.corridor.insert(n);
      for (const auto &g : pg.guards)
        if (seen.insert(g.condition_node).second)
          ap.guards.push_back(g);
      ap.per_path.push_back(std::move(pg));
    }
    std::sort(ap.guards.begin(), ap.guards.end(),
              [](const GuardSite &x, const GuardSite &y) { return x.condition_node < y.condition_node; });
    a.pairs.push_back(std::move(ap));
  }
  t.guards = clock.lap();

  std::vector<PairGuards> digest;
  for (const auto &ap : a.pairs)
    digest.push_back({&ap.pair, ap.guards});
  a.report = compute_metrics(a.graph, a.taint, digest, root, options.timings ? std::optional(t) : std::nullopt);
  for (const auto &w : a.summary_warnings)
    a.report.diagnostics.push_back("summary: " + w);
  for (const auto &w : a.interproc.warnings)
    a.report.diagnostics.push_back(w.code + ": " + w.message);
  return a;
}

std::vector<Candidate> find_candidates(const Analysis &a, std::vector<SkippedSite> *skipped) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    const AnalyzedPair &ap = a.pairs[i];
    for (const auto &g : ap.guards) {
      Bugdoorability b = is_bugdoorable(a.graph, g);
      if (!b.bugdoorable) {
        if (skipped)
          skipped->push_back({g, *b.reason, b.detail});
        continue;
      }
      Candidate c;
      c.pair = i;
      c.guard = g;
      c.sink = ap.pair.sink;
      c.source = ap.pair.source;
      c.paths = ap.pair.paths;
      for (std::size_t k = 0; k < ap.per_path.size(); ++k) {
        const auto &gs = ap.per_path[k].guards;
        if (std::any_of(gs.begin(), gs.end(), [&](const GuardSite &x) { return x.condition_node == g.condition_node; })) {
          c.chosen_path = ap.pair.paths[k];
          break;
        }
      }
      c.plans = enumerate_plans(a.graph, g, ap.pair.sink, ap.corridor);
      if (c.plans.empty()) {
        if (skipped)
          skipped->push_back({g, SkipReason::NotUnderstood, "no applicable instrumentation"});
        continue;
      }
      out.push_back(std::move(c));
    }
  }
  std::vector<SourceSinkPair> format_pairs = group_pairs(a.taint.passthrough_paths);
  for (std::size_t i = 0; i < format_pairs.size(); ++i) {
    const SourceSinkPair &p = format_pairs[i];
    auto plan = format_string_antipattern(a.graph, p.sink);
    if (!plan)
      continue;
    Candidate c;
    c.pair = i;
    c.format = true;
    c.sink = p.sink;
    c.source = p.source;
    c.paths = p.paths;
    c.chosen_path = p.paths.front();
    c.plans = {*plan};
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json candidates_json(const Analysis &a, const std::vector<Candidate> &candidates,
                               const std::vector<SkippedSite> &skipped) {
  using nlohmann::json;
  auto where = [&](NodeId id) { return loc_json(locate(a.graph, id, a.root)); };
  json sites = json::array();
  for (const auto &c : candidates) {
    std::map<std::string, int> per_class;
    for (const auto &p : c.plans)
      ++per_class[to_string(p.cls)];
    sites.push_back({{"location", where(c.guard ? c.guard->condition_node : c.sink.call_node)},
                     {"sink", c.sink.callee},
                     {"sink_location", where(c.sink.call_node)},
                     {"kind", c.format ? "format" : "guard"},
                     {"instrumentations", per_class}});
  }
  json skips = json::array();
  for (const auto &k : skipped)
    skips.push_back({{"location", where(k.guard.condition_node)},
                     {"classification", to_string(k.guard.classification)},
                     {"reason", to_string(k.reason)},
                     {"detail", k.detail}});
  return {{"bugdoorable", sites}, {"skipped", skips}};
}

Variant make_variant(const Analysis &a, const std::vector<Candidate> &candidates, std::uint64_t seed) {
  if (candidates.empty())
    throw PipelineError(exit_code::kNothingBugdoorable, "no bugdoorable site");
  std::mt19937_64 site_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::size_t start = static_cast<std::size_t>(site_rng() % candidates.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Candidate &c = candidates[(start + k) % candidates.size()];
    if (c.guard && !is_bugdoorable(a.graph, *c.guard).bugdoorable)
      throw std::logic_error("rewrite requested for a site that is not bugdoorable");
    AppliedPlan applied = choose_and_apply(a.graph, c.plans, seed, a.texts);
    if (applied.error == ApplyError::SpanMismatch)
      throw PipelineError(exit_code::kFailure, "source changed since analysis: " + c.plans.front().rewrites.front().file);
    if (applied.error != ApplyError::None)
      continue;
    Variant v;
    v.seed = seed;
    GroundTruthRecord &r = v.record;
    r.source = c.source;
    r.sink = c.sink;
    r.paths = c.paths;
    r.chosen_path = c.chosen_path;
    r.guard = c.guard;
    r.plan = applied.plan;
    r.file = applied.file;
    r.original_snippet = applied.original_snippet;
    r.rewritten_snippet = applied.rewritten_snippet;
    r.vuln_class = c.format ? VulnClass::FormatString : c.sink.vuln_class;
    v.file = applied.file;
    v.rewritten_text = std::move(applied.rewritten_text);
    v.ground_truth = ground_truth_json(a.graph, r, a.root);
    v.ground_truth["seed"] = seed;
    v.ground_truth["corpus"] = a.root.generic_string();
    v.ground_truth["rewritten_file"] = fs::path(v.file).lexically_relative(a.root).generic_string();
    return v;
  }
  throw PipelineError(exit_code::kNothingBugdoorable, "every candidate rewrite failed to re-parse");
}

void write_variant(const Analysis &a, const Variant &v, const fs::path &dir) {
  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  for (const auto &rel : a.files) {
    std::string key = (a.root / rel).generic_string();
    const std::string &bytes = key == v.file ? v.rewritten_text : a.texts.at(key);
    write_file_atomic(tmp / rel, bytes);
  }
  write_file_atomic(tmp / "ground_truth.json", dump_json(v.ground_truth));
  fs::remove_all(dir);
  if (dir.has_parent_path())
    fs::create_directories(dir.parent_path());
  fs::rename(tmp, dir);
}

} // namespace bugforge
