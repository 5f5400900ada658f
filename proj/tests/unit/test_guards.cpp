#include <doctest.h>

#include "bugforge/guards.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <deque>

using namespace bugforge;
using test::graph_of;

namespace {

SummaryMap glibc() { return load_external_summaries(test::glibc_summaries()).summaries; }

struct Analysis {
  CodePropertyGraph graph;
  InterprocResult ip;
  TaintResult taint;
};

Analysis analyze(const std::string &text, const std::string &name = "t.c") {
  Analysis a{graph_of(text, name), {}, {}};
  a.ip = run_interproc(a.graph, glibc());
  a.taint = run_taint(a.graph, a.ip);
  return a;
}

std::string fixture(const std::string &dir) {
  for (const auto &[name, text] : test::fixture_texts())
    if (name.find(dir) != std::string::npos)
      return text;
  FAIL("missing fixture " << dir);
  return {};
}

int line(const Analysis &a, NodeId id) { return a.graph.node(id).span.start_line; }

std::vector<int> lines(const Analysis &a, const std::vector<NodeId> &ids) {
  std::vector<int> out;
  for (NodeId id : ids)
    out.push_back(line(a, id));
  return out;
}

// Edge-simple path count straight from the edge list, explicit stack.
std::size_t count_paths(const CodePropertyGraph &g, NodeId from, NodeId to) {
  if (from == to)
    return 1;
  std::map<NodeId, std::vector<std::size_t>> out;
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    if (g.edges[e].kind == EdgeKind::CfgNext)
      out[g.edges[e].src].push_back(e);
  std::map<std::pair<NodeId, NodeId>, int> used;
  std::size_t count = 0;
  struct Frame {
    NodeId at;
    std::vector<std::pair<NodeId, NodeId>> next;
    std::size_t i = 0;
    std::pair<NodeId, NodeId> via{kNoNode, kNoNode};
  };
  auto frame = [&](NodeId at, std::pair<NodeId, NodeId> via) {
    Frame f{at, {}, 0, via};
    for (std::size_t e : out[at])
      f.next.emplace_back(at, g.edges[e].dst);
    std::sort(f.next.begin(), f.next.end());
    f.next.erase(std::unique(f.next.begin(), f.next.end()), f.next.end());
    return f;
  };
  std::vector<Frame> stack{frame(from, {kNoNode, kNoNode})};
  while (!stack.empty()) {
    Frame &top = stack.back();
    if (top.i == top.next.size()) {
      if (top.via.first != kNoNode)
        used[top.via] = 0;
      stack.pop_back();
      continue;
    }
    auto e = top.next[top.i++];
    if (used[e])
      continue;
    if (e.second == to) {
      ++count;
      continue;
    }
    used[e] = 1;
    stack.push_back(frame(e.second, e));
  }
  return count;
}

bool reachable_avoiding(const CodePropertyGraph &g, NodeId from, NodeId to, NodeId avoid) {
  std::set<NodeId> seen{from};
  std::deque<NodeId> q{from};
  while (!q.empty()) {
    NodeId n = q.front();
    q.pop_front();
    if (n == to)
      return true;
    for (const auto &e : g.edges)
      if (e.kind == EdgeKind::CfgNext && e.src == n && e.dst != avoid && seen.insert(e.dst).second)
        q.push_back(e.dst);
  }
  return false;
}

const GuardSite *guard_at(const Analysis &a, const PathGuards &pg, int at) {
  for (const auto &g : pg.guards)
    if (line(a, g.condition_node) == at)
      return &g;
  return nullptr;
}

} // namespace

TEST_CASE("running example check") {
  Analysis a = analyze(test::running_example_text(), "running_example.c");
  REQUIRE(a.taint.paths.size() == 4);
  for (const auto &p : a.taint.paths) {
    PathGuards pg = analyze_guards(a.graph, p);
    REQUIRE(pg.guards.size() == 1);
    const GuardSite &g = pg.guards[0];
    CHECK(line(a, g.condition_node) == 24);
    CHECK(g.function == "copy_buffer");
    CHECK(g.guarded_var == "len");
    CHECK(g.classification == GuardClass::AbortingCheck);
    CHECK(g.polarity == Polarity::MustBeFalseToPass);
    CHECK(g.abort_evidence == std::set<AbortEvidence>{AbortEvidence::ExitCall});
    CHECK_FALSE(g.gating);
    CHECK(pg.sanitizations.empty());
    CHECK_FALSE(pg.corridor.truncated);
    if (lines(a, p.hops) == std::vector<int>{3, 4, 20, 30})
      CHECK(lines(a, corridor_statements(a.graph, pg.corridor, p)) == std::vector<int>{3, 4, 20, 24, 29});
  }
}

TEST_CASE("segment sequences match an independent count") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    Analysis a = analyze(text, name);
    for (const auto &p : a.taint.paths) {
      ControlFlowCorridor c = enumerate_corridor(a.graph, p);
      REQUIRE_FALSE(c.segments.empty());
      std::size_t total = 0;
      for (const auto &s : c.segments) {
        CHECK(s.sequences.size() == count_paths(a.graph, s.from, s.to));
        for (const auto &seq : s.sequences) {
          CHECK(seq.front() == s.from);
          CHECK(seq.back() == s.to);
          for (NodeId id : seq)
            CHECK(a.graph.node(id).function == s.function);
        }
        total += s.sequences.size();
      }
      CHECK(total == c.total_enumerated);
      CHECK(c.segments.front().from == p.hops.front());
    }
  }
}

TEST_CASE("corridor limit truncates") {
  Analysis a = analyze(fixture("12_non_aborting"));
  REQUIRE(a.taint.paths.size() == 1);
  ControlFlowCorridor c = enumerate_corridor(a.graph, a.taint.paths[0], 1);
  CHECK(c.truncated);
  CHECK(c.total_enumerated == 1);
}

TEST_CASE("guards through derived variables") {
  Analysis a = analyze(fixture("11_derived_check"));
  REQUIRE(a.taint.paths.size() == 1);
  PathGuards pg = analyze_guards(a.graph, a.taint.paths[0]);
  REQUIRE(pg.guards.size() == 1);
  CHECK(pg.guards[0].guarded_var == "n");
  CHECK(pg.guards[0].derived_var == "too_big");
  CHECK(pg.guards[0].classification == GuardClass::AbortingCheck);
}

TEST_CASE("clamping is not aborting") {
  Analysis a = analyze(fixture("12_non_aborting"));
  REQUIRE(a.taint.paths.size() == 1);
  PathGuards pg = analyze_guards(a.graph, a.taint.paths[0]);
  REQUIRE(pg.guards.size() == 1);
  CHECK(pg.guards[0].classification == GuardClass::NonAbortingCheck);
  CHECK(pg.guards[0].abort_evidence.empty());
  CHECK(pg.guards[0].polarity == Polarity::Unknown);
}

TEST_CASE("gating check") {
  Analysis a = analyze(fixture("16_gating"));
  REQUIRE(a.taint.paths.size() == 1);
  PathGuards pg = analyze_guards(a.graph, a.taint.paths[0]);
  REQUIRE(pg.guards.size() == 1);
  const GuardSite &g = pg.guards[0];
  CHECK(g.classification == GuardClass::AbortingCheck);
  CHECK(g.polarity == Polarity::MustBeTrueToPass);
  CHECK(g.gating);
  CHECK(g.abort_evidence == std::set<AbortEvidence>{AbortEvidence::ReturnStmt});
}

TEST_CASE("null truncation is a sanitization") {
  std::string text = fixture("13_sanitization");
  Analysis a = analyze(text);
  REQUIRE(a.taint.paths.size() == 1);
  PathGuards pg = analyze_guards(a.graph, a.taint.paths[0]);
  CHECK(pg.guards.empty());
  REQUIRE(pg.sanitizations.size() == 1);
  CHECK(pg.sanitizations[0].classification == GuardClass::Sanitization);
  CHECK(pg.sanitizations[0].derived_var == "buf");
  CHECK(line(a, pg.sanitizations[0].condition_node) == 20);

  std::string other = text;
  std::string store = "buf[sizeof(buf) - 1] = 0;";
  REQUIRE(other.find(store) != std::string::npos);
  other.replace(other.find(store), store.size(), "buf[0] = 'A';");
  Analysis b = analyze(other);
  for (const auto &p : b.taint.paths)
    CHECK(analyze_guards(b.graph, p).sanitizations.empty());
}

TEST_CASE("abort evidence kinds") {
  auto only_guard = [](const std::string &body) {
    Analysis a = analyze("int f(FILE *fp, char *d, char *s) {\n"
                         "  int n = 0;\n"
                         "  int err = 0;\n"
                         "  fread(&n, 4, 1, fp);\n" +
                         body + "  memcpy(d, s, n);\n  return 0;\n}\n");
    REQUIRE(!a.taint.paths.empty());
    PathGuards pg = analyze_guards(a.graph, a.taint.paths[0]);
    REQUIRE(pg.guards.size() == 1);
    return pg.guards[0];
  };
  GuardSite e = only_guard("  if (n > 64) { err = -1; return err; }\n");
  CHECK(e.classification == GuardClass::AbortingCheck);
  CHECK(e.abort_evidence == std::set<AbortEvidence>{AbortEvidence::ReturnStmt, AbortEvidence::ErrorValueSet});
  GuardSite s = only_guard("  if (n > 64) abort();\n");
  CHECK(s.abort_evidence.count(AbortEvidence::SignalRaise) == 1);
  GuardSite x = only_guard("  if (!(n <= 64)) exit(2);\n");
  CHECK(x.abort_evidence == std::set<AbortEvidence>{AbortEvidence::ExitCall});
  CHECK(x.polarity == Polarity::MustBeFalseToPass);
  GuardSite t = only_guard("  if (n <= 64) { } else return -1;\n");
  CHECK(t.polarity == Polarity::MustBeTrueToPass);
  CHECK_FALSE(t.gating);
  GuardSite w = only_guard("  switch (n) { case 1: return 1; default: break; }\n");
  CHECK(w.classification == GuardClass::UnrecognizedMechanism);
  CHECK(w.polarity == Polarity::Unknown);
}

TEST_CASE("loop conditions are never aborting") {
  Analysis a = analyze("void f(FILE *fp, char *d, char *s) {\n"
                       "  int n = 0;\n"
                       "  fread(&n, 4, 1, fp);\n"
                       "  while (n > 64)\n"
                       "    n--;\n"
                       "  memcpy(d, s, n);\n"
                       "}\n");
  REQUIRE_FALSE(a.taint.paths.empty());
  for (const auto &p : a.taint.paths) {
    PathGuards pg = analyze_guards(a.graph, p);
    const GuardSite *g = guard_at(a, pg, 4);
    REQUIRE(g);
    CHECK(g->classification != GuardClass::AbortingCheck);
  }
}

TEST_CASE("guard properties over fixtures") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    Analysis a = analyze(text, name);
    for (const auto &p : a.taint.paths) {
      PathGuards pg = analyze_guards(a.graph, p);
      std::set<NodeId> on = pg.corridor.nodes();
      std::set<NodeId> seen;
      for (const auto &g : pg.guards) {
        CHECK(seen.insert(g.condition_node).second);
        CHECK(on.count(g.condition_node) == 1);
        const CpgNode &n = a.graph.node(g.condition_node);
        CHECK(n.kind == NodeKind::Condition);
        bool uses = std::any_of(n.uses.begin(), n.uses.end(), [&](const std::string &u) {
          return keys_overlap(u, g.derived_var);
        });
        CHECK(uses);
        CHECK(g == classify_guard(a.graph, g));
        if (g.classification != GuardClass::AbortingCheck)
          continue;
        CHECK_FALSE(g.abort_evidence.empty());
        CHECK(g.polarity != Polarity::Unknown);
        // the aborting branch never reaches the protected side
        std::string stop = g.polarity == Polarity::MustBeFalseToPass ? "true" : "false";
        for (const auto &e : a.graph.edges)
          if (e.kind == EdgeKind::CfgNext && e.src == g.condition_node && e.label == stop) {
            CHECK_FALSE(reachable_avoiding(a.graph, e.dst, g.segment_target, g.condition_node));
            for (NodeId t : g.downstream)
              CHECK_FALSE(reachable_avoiding(a.graph, e.dst, t, g.condition_node));
          }
      }
      CHECK(analyze_guards(a.graph, p).guards == pg.guards);
    }
  }
}

TEST_CASE("guards per fixture") {
  struct Expect {
    const char *fixture;
    std::size_t guards, sanitizations;
    GuardClass cls;
  };
  for (const Expect &e : {Expect{"01_increment", 1, 0, GuardClass::AbortingCheck},
                          Expect{"02_arithmetic", 1, 0, GuardClass::AbortingCheck},
                          Expect{"03_return_chain", 1, 0, GuardClass::AbortingCheck},
                          Expect{"05_param", 1, 0, GuardClass::AbortingCheck},
                          Expect{"08_mutual_recursion", 1, 0, GuardClass::AbortingCheck},
                          Expect{"14_adjacent_swap", 1, 0, GuardClass::AbortingCheck},
                          Expect{"18_argv", 1, 0, GuardClass::AbortingCheck}}) {
    CAPTURE(e.fixture);
    Analysis a = analyze(fixture(e.fixture));
    REQUIRE_FALSE(a.taint.paths.empty());
    for (const auto &p : a.taint.paths) {
      PathGuards pg = analyze_guards(a.graph, p);
      CHECK(pg.guards.size() == e.guards);
      CHECK(pg.sanitizations.size() == e.sanitizations);
      for (const auto &g : pg.guards)
        CHECK(g.classification == e.cls);
    }
  }
}
