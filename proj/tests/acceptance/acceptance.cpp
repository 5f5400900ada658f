// Acceptance checks, one line per criterion. Exit status is the number of failures.

#include "bugforge/pipeline.hpp"
#include "bugforge/frontend.hpp"
#include "taint_oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <regex>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace bugforge;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = BUGFORGE_SOURCE_DIR;
const fs::path kRunning = kRoot / "corpora" / "running";
const fs::path kFixtures = kRoot / "corpora" / "fixtures";

struct Result {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string &tag) {
  fs::path d = fs::temp_directory_path() / ("bugforge-accept-" + std::to_string(::getpid())) / tag;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::vector<fs::path> corpora() {
  std::vector<fs::path> out;
  for (const auto &e : fs::directory_iterator(kFixtures))
    if (e.is_directory())
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  out.push_back(kRunning);
  return out;
}

int line_of(const Analysis &a, NodeId id) { return a.graph.node(id).span.start_line; }

std::vector<int> lines_of(const Analysis &a, const std::vector<NodeId> &ids) {
  std::vector<int> out;
  for (NodeId id : ids)
    out.push_back(line_of(a, id));
  return out;
}

std::string join(const std::vector<int> &v) {
  std::string s;
  for (int x : v)
    s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

Result running_example() {
  auto t0 = std::chrono::steady_clock::now();
  Analysis a = analyze_corpus(kRunning / "src");
  double secs = seconds_since(t0);
  const CorpusReport &r = a.report;
  std::size_t aborting = 0, at_24 = 0, guards = 0;
  for (const auto &p : r.per_pair)
    for (const auto &g : p.guards) {
      ++guards;
      if (g.classification == "AbortingCheck") {
        ++aborting;
        at_24 += g.location.line == 24;
      }
    }
  bool pair_ok = r.per_pair.size() == 1 && r.per_pair[0].source_callee == "fread" &&
                 r.per_pair[0].sink_callee == "memcpy" && r.per_pair[0].sink_arg == 2;
  Result res;
  res.pass = r.unique_pairs == 1 && pair_ok && r.dataflow_paths == 4 && guards == 1 && aborting == 1 && at_24 == 1 &&
             secs < 5.0;
  std::ostringstream d;
  d << "unique_pairs=" << r.unique_pairs << " (fread->memcpy arg 2: " << (pair_ok ? "yes" : "no")
    << ") paths=" << r.dataflow_paths << " guards=" << guards << " aborting_at_line_24=" << at_24 << " time="
    << secs << "s";
  res.detail = d.str();
  return res;
}

Result corridor() {
  Analysis a = analyze_corpus(kRunning / "src");
  const DataFlowPath *direct = nullptr;
  for (const auto &p : a.taint.paths)
    if (lines_of(a, p.hops) == std::vector<int>{3, 4, 20, 30})
      direct = &p;
  if (!direct)
    return {false, "direct-read path 3,4,20,30 not found"};
  PathGuards pg = analyze_guards(a.graph, *direct);
  std::vector<NodeId> stmts = corridor_statements(a.graph, pg.corridor, *direct);
  std::vector<int> got = lines_of(a, stmts);
  const std::vector<int> want{3, 4, 20, 24, 29};
  // statement identity: every node is a distinct statement-level node of the expected function
  std::set<NodeId> distinct(stmts.begin(), stmts.end());
  bool ok = got == want && distinct.size() == stmts.size();
  return {ok, "corridor lines " + join(got) + " expected " + join(want)};
}

std::set<oracle::PairKey> keys(const TaintResult &t) {
  std::set<oracle::PairKey> out;
  for (const auto &p : t.pairs)
    out.insert({p.source.call_node, p.source.call_index, p.source.controlled_arg, p.sink.call_node, p.sink.call_index,
                p.sink.sensitive_arg_index});
  return out;
}

Result oracle_equivalence() {
  auto t0 = std::chrono::steady_clock::now();
  std::size_t programs = 0, equal = 0, nonempty = 0, max_loc = 0;
  std::set<TraceCase> cases;
  bool struct_members = false, pointers = false, two_cycle = false, wrapper_chain = false;
  std::vector<std::string> mismatches;
  for (const auto &dir : corpora()) {
    Analysis a = analyze_corpus(dir / "src");
    std::size_t loc = 0;
    for (const auto &[path, text] : a.texts)
      loc = std::max(loc, count_loc(text));
    if (loc > 200)
      continue;
    max_loc = std::max(max_loc, loc);
    ++programs;
    oracle::TaintOracle o(a.graph, a.interproc.summaries, a.interproc.pointer_targets);
    nonempty += !o.pairs().empty();
    if (keys(a.taint) == o.pairs())
      ++equal;
    else
      mismatches.push_back(dir.filename().string());
    for (const auto &p : a.taint.paths) {
      cases.insert(p.hop_cases.begin(), p.hop_cases.end());
      wrapper_chain |= p.crossed_functions.size() >= 3;
      for (const auto &v : p.hop_vars)
        struct_members |= v.find('.') != std::string::npos || v.find("->") != std::string::npos;
    }
    pointers |= !a.interproc.pointer_targets.empty() && !a.taint.pairs.empty();
    for (const auto &step : a.interproc.call_graph.break_steps)
      two_cycle |= step.scc.size() == 2;
  }
  bool listing3 = true;
  for (TraceCase c : {TraceCase::IncDec, TraceCase::Arithmetic, TraceCase::ReturnValue, TraceCase::ArgumentOut,
                      TraceCase::Parameter})
    listing3 &= cases.count(c) > 0;
  double secs = seconds_since(t0);
  Result r;
  r.pass = nonempty >= 10 && equal == programs && listing3 && struct_members && pointers && two_cycle &&
           wrapper_chain && secs < 60.0;
  std::ostringstream d;
  d << equal << "/" << programs << " programs equal, " << nonempty << " with pairs (max " << max_loc << " LOC); five trace cases "
    << (listing3 ? "covered" : "missing") << ", struct members " << struct_members << ", function pointers "
    << pointers << ", two-cycle " << two_cycle << ", wrapper chain " << wrapper_chain << "; time=" << secs << "s";
  for (const auto &m : mismatches)
    d << " mismatch:" << m;
  r.detail = d.str();
  return r;
}

std::vector<fs::path> harness_of(const fs::path &corpus) {
  std::vector<fs::path> out;
  fs::path h = corpus / "harness";
  if (fs::is_directory(h))
    for (const auto &e : fs::directory_iterator(h))
      if (e.path().extension() == ".c")
        out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> inputs_of(const fs::path &corpus, const std::string &prefix) {
  std::vector<fs::path> out;
  if (fs::is_directory(corpus / "inputs"))
    for (const auto &e : fs::directory_iterator(corpus / "inputs"))
      if (e.path().filename().string().rfind(prefix, 0) == 0)
        out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> sources_with(const fs::path &src, const std::vector<fs::path> &harness) {
  std::vector<fs::path> out;
  for (const auto &rel : corpus_files(src))
    out.push_back(src / rel);
  out.insert(out.end(), harness.begin(), harness.end());
  return out;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn) {
  std::atomic<std::size_t> next{0};
  unsigned workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++)
        fn(i);
    });
  for (auto &t : pool)
    t.join();
}

Result instrumentation_soundness() {
  struct Job {
    const Analysis *analysis;
    fs::path corpus;
    InstrumentationPlan plan;
    std::map<std::string, RunOutcome> *baseline;
  };
  VerifyOptions vo;
  std::vector<std::unique_ptr<Analysis>> analyses;
  std::vector<std::unique_ptr<std::map<std::string, RunOutcome>>> baselines;
  std::vector<Job> jobs;
  fs::path work = scratch("soundness");
  std::size_t sites = 0;
  for (const auto &dir : corpora()) {
    auto a = std::make_unique<Analysis>(analyze_corpus(dir / "src"));
    std::vector<Candidate> cs = find_candidates(*a);
    if (cs.empty())
      continue;
    fs::path bin = work / (dir.filename().string() + "-original");
    build_program(sources_with(dir / "src", harness_of(dir)), bin, vo);
    auto base = std::make_unique<std::map<std::string, RunOutcome>>();
    for (const auto &in : inputs_of(dir, ""))
      (*base)[in.string()] = run_program(bin, in, vo);
    for (const auto &c : cs) {
      ++sites;
      for (const auto &p : c.plans)
        jobs.push_back({a.get(), dir, p, base.get()});
    }
    analyses.push_back(std::move(a));
    baselines.push_back(std::move(base));
  }

  std::mutex mu;
  std::size_t reparse_bad = 0, benign_bad = 0, build_bad = 0, crafted_total = 0, crafted_violations = 0;
  std::vector<std::string> failures;
  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job &job = jobs[i];
    const Analysis &a = *job.analysis;
    const std::string &file = job.plan.rewrites.front().file;
    const std::string &before = a.texts.at(file);
    std::string after = apply_rewrites(before, job.plan.rewrites);
    TranslationUnit u0 = parse_unit(before, file), u1 = parse_unit(after, file);
    bool reparse_ok = u1.skipped_regions.size() <= u0.skipped_regions.size() && !u1.unbalanced &&
                      u1.functions.size() == u0.functions.size();
    fs::path dir = work / (job.corpus.filename().string() + "-" + std::to_string(i));
    fs::path src = dir / "src";
    for (const auto &rel : a.files) {
      std::string key = (a.root / rel).generic_string();
      write_file_atomic(src / rel, key == file ? after : a.texts.at(key));
    }
    std::size_t benign_diff = 0, crafted = 0, violations = 0;
    bool built = true;
    try {
      build_program(sources_with(src, harness_of(job.corpus)), dir / "variant", vo);
      for (const auto &[input, original] : *job.baseline) {
        RunOutcome v = run_program(dir / "variant", input, vo);
        bool benign = fs::path(input).filename().string().rfind("benign_", 0) == 0;
        Verdict verdict = judge(original, v);
        if (benign && verdict != Verdict::BenignIdentical)
          ++benign_diff;
        if (!benign) {
          ++crafted;
          violations += verdict == Verdict::SinkViolation;
        }
      }
    } catch (const PipelineError &) {
      built = false;
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
    std::lock_guard<std::mutex> lock(mu);
    reparse_bad += !reparse_ok;
    build_bad += !built;
    benign_bad += benign_diff > 0;
    crafted_total += crafted;
    crafted_violations += violations;
    if (!reparse_ok || !built || benign_diff)
      failures.push_back(job.corpus.filename().string() + ":" + job.plan.description);
  });

  // The running example's seeded variant must break on the crafted input.
  Analysis a = analyze_corpus(kRunning / "src");
  Variant v = make_variant(a, find_candidates(a), 1);
  fs::path out = work / "running-seed-1";
  write_variant(a, v, out);
  bool crafted_violation = false, benign_same = true;
  for (const auto &iv : verify_variant(out, kRunning / "inputs")) {
    if (iv.input.rfind("crafted_300", 0) == 0)
      crafted_violation = iv.verdict == Verdict::SinkViolation;
    else
      benign_same &= iv.verdict == Verdict::BenignIdentical;
  }
  std::error_code ec;
  fs::remove_all(work, ec);

  Result r;
  r.pass = !jobs.empty() && reparse_bad == 0 && build_bad == 0 && benign_bad == 0 && crafted_violation && benign_same;
  std::ostringstream d;
  d << sites << " sites, " << jobs.size() << " rewrites: re-parse failures " << reparse_bad << ", build failures "
    << build_bad << ", benign divergences " << benign_bad << "; running example seed 1 crafted_300 "
    << (crafted_violation ? "SinkViolation" : "no violation") << "; crafted inputs violating across all rewrites "
    << crafted_violations << "/" << crafted_total;
  for (std::size_t i = 0; i < std::min<std::size_t>(failures.size(), 5); ++i)
    d << " [" << failures[i] << "]";
  r.detail = d.str();
  return r;
}

std::map<std::string, std::string> tree(const fs::path &root) {
  std::map<std::string, std::string> out;
  if (fs::is_directory(root))
    for (const auto &e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file())
        out[e.path().lexically_relative(root).generic_string()] = read_file(e.path());
  return out;
}

Result determinism() {
  fs::path work = scratch("determinism");
  std::size_t corpora_checked = 0, identical = 0, files = 0;
  for (const auto &dir : {kRunning, kFixtures / "10_two_by_two", kFixtures / "17_one_source_two_sinks"}) {
    std::vector<std::map<std::string, std::string>> runs;
    fs::path out = work / dir.filename();
    for (int run = 0; run < 2; ++run) {
      fs::remove_all(out);
      std::string cmd = std::string(BUGFORGE_CLI) + " insert " + (dir / "src").string() + " --seed 42 --count 3 --out " +
                        out.string() + " --json-only > " + out.string() + ".json";
      if (std::system(cmd.c_str()) != 0)
        return {false, "insert failed: " + cmd};
      auto t = tree(out);
      t["<stdout>"] = read_file(out.string() + ".json");
      fs::remove(out.string() + ".json");
      runs.push_back(std::move(t));
    }
    ++corpora_checked;
    files += runs[0].size();
    identical += runs[0] == runs[1] && runs[0].size() > 1;
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  return {identical == corpora_checked,
          std::to_string(identical) + "/" + std::to_string(corpora_checked) + " corpora byte-identical across two " +
              "--seed 42 runs (" + std::to_string(files) + " files compared)"};
}

// Injects constructs the analysis cannot model and checks no rewrite touches them.
Result conservativeness() {
  struct Range {
    std::size_t a, b;
  };
  std::vector<std::pair<fs::path, std::string>> inputs;
  for (const auto &dir : corpora())
    for (const auto &rel : corpus_files(dir / "src"))
      inputs.emplace_back(rel, read_file(dir / "src" / rel));
  std::mt19937_64 rng(20240601);
  fs::path work = scratch("mutation");
  const std::regex ident(R"([A-Za-z_]\w*)");
  static const std::set<std::string> keywords{"if", "int", "char", "unsigned", "long", "return", "sizeof", "struct",
                                              "void", "size_t", "const", "else", "while", "for", "short", "signed"};
  std::size_t trials = 0, violations = 0, guard_hits = 0, suppressed = 0, variants = 0, analysis_errors = 0;
  std::vector<std::string> notes;

  for (int trial = 0; trial < 1000; ++trial) {
    auto [rel, text] = inputs[rng() % inputs.size()];
    std::vector<Range> injected;
    auto replace = [&](std::size_t p, std::size_t old_len, const std::string &with) {
      long delta = static_cast<long>(with.size()) - static_cast<long>(old_len);
      for (auto &r : injected) {
        if (r.a >= p + old_len) {
          r.a += delta;
          r.b += delta;
        } else if (r.b > p) {
          r.b += delta;
        }
      }
      text.replace(p, old_len, with);
      injected.push_back({p, p + with.size()});
    };
    int mutations = 1 + static_cast<int>(rng() % 3);
    for (int m = 0; m < mutations; ++m) {
      // statement boundaries and identifiers inside function bodies
      std::vector<std::size_t> boundaries;
      std::vector<std::pair<std::size_t, std::size_t>> idents, cond_idents;
      int depth = 0, paren = 0;
      bool in_if = false;
      int if_paren = 0;
      for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '"' || c == '\'') {
          for (++i; i < text.size() && text[i] != c; ++i)
            if (text[i] == '\\')
              ++i;
          continue;
        }
        if (c == '{')
          ++depth;
        if (c == '}')
          --depth;
        if (c == '(')
          ++paren;
        if (c == ')') {
          --paren;
          if (in_if && paren < if_paren)
            in_if = false;
        }
        if (depth >= 1 && paren == 0 && (c == ';' || c == '{'))
          boundaries.push_back(i + 1);
        if (depth >= 1 && (std::isalpha(static_cast<unsigned char>(c)) || c == '_') &&
            (i == 0 || !(std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_'))) {
          std::size_t e = i;
          while (e < text.size() && (std::isalnum(static_cast<unsigned char>(text[e])) || text[e] == '_'))
            ++e;
          std::string word = text.substr(i, e - i);
          if (word == "if") {
            in_if = true;
            if_paren = paren + 1;
          } else if (!keywords.count(word)) {
            std::size_t k = e;
            while (k < text.size() && text[k] == ' ')
              ++k;
            if (k < text.size() && text[k] != '(') {
              idents.emplace_back(i, e - i);
              if (in_if)
                cond_idents.emplace_back(i, e - i);
            }
          }
          i = e - 1;
        }
      }
      int op = static_cast<int>(rng() % 4);
      if ((op == 0 || op == 1) && !boundaries.empty()) {
        std::size_t at = boundaries[rng() % boundaries.size()];
        std::string label = "L_mut" + std::to_string(trial) + "_" + std::to_string(m);
        replace(at, 0, op == 0 ? " __asm__ volatile(\"\" ::: \"memory\");" : " goto " + label + "; " + label + ": ;");
      } else {
        auto &pool = (!cond_idents.empty() && rng() % 2) ? cond_idents : idents;
        if (pool.empty())
          continue;
        auto [at, len] = pool[rng() % pool.size()];
        std::string id = text.substr(at, len);
        replace(at, len, op == 2 ? "({ " + id + "; })" : "_Generic((" + id + "), default: (" + id + "))");
      }
    }

    fs::path dir = work / std::to_string(trial);
    write_file_atomic(dir / rel, text);
    ++trials;
    std::unique_ptr<Analysis> a;
    try {
      a = std::make_unique<Analysis>(analyze_corpus(dir));
    } catch (const std::exception &e) {
      ++analysis_errors;
      std::error_code ec;
      fs::remove_all(dir, ec);
      continue;
    }
    auto overlaps = [&](std::size_t s, std::size_t e) {
      for (const auto &r : injected)
        if (s == e ? (r.a < s && s < r.b) : (s < r.b && r.a < e))
          return true;
      return false;
    };
    std::vector<SkippedSite> skipped;
    std::vector<Candidate> cs = find_candidates(*a, &skipped);
    bool bad = false;
    for (const auto &c : cs) {
      if (c.guard) {
        const CpgNode &n = a->graph.node(c.guard->condition_node);
        if (!n.stmt || overlaps(n.stmt->span.byte_start, n.stmt->span.byte_end))
          bad = true;
      }
      for (const auto &p : c.plans)
        for (const auto &rw : p.rewrites)
          bad |= overlaps(rw.byte_start, rw.byte_end);
    }
    for (const auto &s : skipped) {
      const CpgNode &n = a->graph.node(s.guard.condition_node);
      if (n.stmt && overlaps(n.stmt->span.byte_start, n.stmt->span.byte_end)) {
        ++guard_hits;
        suppressed += s.reason == SkipReason::NotUnderstood;
      }
    }
    try {
      Variant v = make_variant(*a, cs, static_cast<std::uint64_t>(trial));
      ++variants;
      for (const auto &rw : v.record.plan.rewrites)
        bad |= overlaps(rw.byte_start, rw.byte_end);
    } catch (const PipelineError &) {
    } catch (const std::logic_error &e) {
      bad = true;
    }
    if (bad) {
      ++violations;
      if (notes.size() < 3)
        notes.push_back(rel.generic_string() + "#" + std::to_string(trial));
    }
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::error_code ec;
  fs::remove_all(work, ec);
  Result r;
  r.pass = trials == 1000 && violations == 0 && analysis_errors == 0 && guard_hits > 0;
  std::ostringstream d;
  d << trials << " mutation trials: violations " << violations << ", analysis errors " << analysis_errors
    << ", guards hit by an injection " << guard_hits << " (all skipped, " << suppressed << " as NotUnderstood)"
    << ", variants produced " << variants;
  for (const auto &n : notes)
    d << " [" << n << "]";
  r.detail = d.str();
  return r;
}

Result all_to_all() {
  Analysis a = analyze_corpus(kFixtures / "10_two_by_two" / "src");
  std::set<NodeId> sources, sinks;
  for (const auto &p : a.taint.pairs) {
    sources.insert(p.source.call_node);
    sinks.insert(p.sink.call_node);
  }
  bool ok = a.report.unique_pairs == 4 && sources.size() == 2 && sinks.size() == 2;
  return {ok, "2 sources x 2 sinks: unique_pairs=" + std::to_string(a.report.unique_pairs) + " (" +
                  std::to_string(sources.size()) + " sources, " + std::to_string(sinks.size()) + " sinks)"};
}

// Tarjan over an adjacency map.
std::vector<std::set<std::string>> sccs(const std::set<std::string> &nodes,
                                        const std::set<std::pair<std::string, std::string>> &edges) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto &[a, b] : edges)
    adj[a].push_back(b);
  std::map<std::string, int> index, low;
  std::vector<std::string> stack;
  std::set<std::string> on;
  std::vector<std::set<std::string>> out;
  int counter = 0;
  std::function<void(const std::string &)> visit = [&](const std::string &v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on.insert(v);
    for (const auto &w : adj[v]) {
      if (!index.count(w)) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::set<std::string> comp;
      std::string w;
      do {
        w = stack.back();
        stack.pop_back();
        on.erase(w);
        comp.insert(w);
      } while (w != v);
      out.push_back(comp);
    }
  };
  for (const auto &n : nodes)
    if (!index.count(n))
      visit(n);
  return out;
}

bool cyclic(const std::set<std::string> &comp, const std::set<std::pair<std::string, std::string>> &edges) {
  if (comp.size() > 1)
    return true;
  const std::string &v = *comp.begin();
  return edges.count({v, v}) > 0;
}

Result topological_property() {
  std::mt19937_64 rng(8);
  std::size_t graphs = 0, bad_order = 0, bad_break = 0, with_cycles = 0, broken_total = 0;
  for (int g = 0; g < 100; ++g) {
    int n = 1 + static_cast<int>(rng() % 30);
    CallGraph cg;
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
      names.push_back("fn" + std::to_string(i));
      cg.nodes.insert(names.back());
      cg.call_count[names.back()] = static_cast<int>(rng() % 5);
    }
    std::set<std::pair<std::string, std::string>> original;
    int m = static_cast<int>(rng() % static_cast<unsigned>(3 * n + 1));
    for (int k = 0; k < m; ++k)
      original.insert({names[rng() % names.size()], names[rng() % names.size()]});
    for (const auto &[a, b] : original)
      cg.edges.push_back({a, b, {}, false});
    break_cycles(cg);
    ++graphs;

    // replay each break against independently computed components
    std::set<std::pair<std::string, std::string>> live = original;
    bool ok = true;
    for (const auto &c : sccs(cg.nodes, live))
      with_cycles += cyclic(c, live) ? 1 : 0;
    for (const auto &step : cg.break_steps) {
      std::set<std::string> scc(step.scc.begin(), step.scc.end());
      bool found = false;
      for (const auto &c : sccs(cg.nodes, live))
        found |= c == scc && cyclic(c, live);
      auto key = [&](const std::string &f) { return std::make_pair(cg.call_count.at(f), f); };
      for (const auto &member : scc)
        ok &= key(step.function) <= key(member);
      std::set<std::pair<std::string, std::string>> expect;
      for (const auto &[a, b] : live)
        if (a == step.function && scc.count(b))
          expect.insert({a, b});
      std::set<std::pair<std::string, std::string>> removed;
      for (const auto &e : step.removed)
        removed.insert({e.caller, e.callee});
      ok &= found && removed == expect;
      for (const auto &e : removed)
        live.erase(e);
    }
    for (const auto &c : sccs(cg.nodes, live))
      ok &= !cyclic(c, live);
    std::set<std::pair<std::string, std::string>> broken;
    for (const auto &e : cg.broken_edges)
      broken.insert({e.caller, e.callee});
    broken_total += broken.size();
    for (const auto &e : broken)
      ok &= !live.count(e) && original.count(e);
    ok &= live.size() + broken.size() == original.size();
    bad_break += !ok;

    std::vector<std::string> order = topological_order(cg);
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i)
      pos[order[i]] = i;
    bool order_ok = order.size() == cg.nodes.size();
    for (const auto &[a, b] : original)
      if (!cg.is_broken(a, b) && a != b)
        order_ok &= pos.count(a) && pos.count(b) && pos[b] < pos[a];
    bad_order += !order_ok;
  }
  std::ostringstream d;
  d << graphs << " random graphs (" << with_cycles << " cyclic components, " << broken_total
    << " broken edges): order violations " << bad_order << ", break violations " << bad_break;
  return {graphs == 100 && bad_order == 0 && bad_break == 0 && with_cycles > 0, d.str()};
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char *name;
    Result (*run)();
  };
  const Criterion criteria[] = {
      {1, "running example", running_example},
      {2, "control-flow corridor", corridor},
      {3, "oracle equivalence", oracle_equivalence},
      {4, "instrumentation soundness", instrumentation_soundness},
      {5, "determinism", determinism},
      {6, "conservativeness", conservativeness},
      {7, "unique pair formula", all_to_all},
      {8, "topological order", topological_property},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    Result r;
    try {
      r = c.run();
    } catch (const std::exception &e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("criterion %d %-26s %s  %s\n", c.id, c.name, r.pass ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
  }
  return failed;
}
