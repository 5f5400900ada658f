#include <doctest.h>

#include "bugforge/taint.hpp"
#include "test_support.hpp"

#include <algorithm>

using namespace bugforge;
using test::graph_of;

namespace {

SummaryMap glibc() { return load_external_summaries(test::glibc_summaries()).summaries; }

struct Analysis {
  CodePropertyGraph graph;
  InterprocResult ip;
  TaintResult taint;
};

Analysis analyze(const std::string &text, const std::string &name = "t.c", TraceConfig cfg = {}) {
  Analysis a{graph_of(text, name), {}, {}};
  a.ip = run_interproc(a.graph, glibc());
  a.taint = run_taint(a.graph, a.ip, cfg);
  return a;
}

std::vector<int> hop_lines(const CodePropertyGraph &g, const DataFlowPath &p) {
  std::vector<int> out;
  for (NodeId id : p.hops)
    out.push_back(g.node(id).span.start_line);
  return out;
}

std::set<std::vector<int>> all_hop_lines(const Analysis &a) {
  std::set<std::vector<int>> out;
  for (const auto &p : a.taint.paths)
    out.insert(hop_lines(a.graph, p));
  return out;
}

} // namespace

TEST_CASE("running example sinks and sources") {
  Analysis a = analyze(test::running_example_text(), "running_example.c");
  REQUIRE(a.taint.sinks.size() == 1);
  const SinkSite &s = a.taint.sinks[0];
  CHECK(s.callee == "memcpy");
  CHECK(s.sensitive_arg_index == 2);
  CHECK(s.vuln_class == VulnClass::BufferLength);
  CHECK(a.graph.node(s.call_node).span.start_line == 30);
  REQUIRE(a.taint.sources.size() == 1);
  CHECK(a.taint.sources[0].callee == "fread");
  CHECK(a.taint.sources[0].source_kind == SourceKind::File);
  CHECK(a.taint.sources[0].controlled_arg == 0);
  CHECK(a.graph.node(a.taint.sources[0].call_node).span.start_line == 3);
}

TEST_CASE("running example paths") {
  Analysis a = analyze(test::running_example_text(), "running_example.c");
  CHECK(a.taint.paths.size() == 4);
  CHECK(all_hop_lines(a) == std::set<std::vector<int>>{{3, 4, 20, 30}, {3, 4, 21, 30}, {3, 4, 8, 16, 30}, {3, 4, 8, 17, 30}});
  CHECK(a.taint.pairs.size() == 1);
  CHECK(a.taint.truncated.empty());
  for (const auto &p : a.taint.paths) {
    CHECK(path_connected(a.graph, p));
    CHECK(p.hop_vars.size() + 1 == p.hops.size());
    CHECK(p.hop_vars.front() == "length");
    CHECK(p.hop_vars.back() == "len");
    CHECK(p.hop_cases.front() == TraceCase::Source);
    CHECK(p.hop_cases.back() == TraceCase::Sink);
    if (p.hops.size() == 5) {
      CHECK(p.hop_vars == std::vector<std::string>{"length", "length", "the_len", "len"});
      CHECK(p.crossed_functions == std::vector<std::string>{"read_from_file", "wrapper", "copy_buffer"});
    } else {
      CHECK(p.hop_vars == std::vector<std::string>{"length", "length", "len"});
      CHECK(p.crossed_functions == std::vector<std::string>{"read_from_file", "copy_buffer"});
    }
  }
}

TEST_CASE("definition tree is rooted and labeled") {
  Analysis a = analyze(test::running_example_text(), "running_example.c");
  TaintContext ctx(a.graph, a.ip.summaries, a.ip.pointer_targets);
  TraceResult r = trace_to_sources(ctx, a.taint.sinks[0]);
  const DefinitionTree &t = r.tree;
  CHECK(t.vertices[static_cast<std::size_t>(t.root)].kind == TreeVertex::Kind::Root);
  for (std::size_t v = 0; v < t.vertices.size(); ++v) {
    if (static_cast<int>(v) == t.root)
      continue;
    CHECK_FALSE(t.toward_sink[v].empty());
    CHECK_FALSE(t.vertices[v].var.empty());
  }
}

TEST_CASE("memoization does not change results") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    TraceConfig plain;
    plain.memoize = false;
    Analysis with = analyze(text, name);
    Analysis without = analyze(text, name, plain);
    if (!with.taint.truncated.empty() || !without.taint.truncated.empty())
      continue;
    CHECK(with.taint.paths == without.taint.paths);
  }
}

TEST_CASE("every emitted path is connected") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    Analysis a = analyze(text, name);
    for (const auto &p : a.taint.paths) {
      CHECK(path_connected(a.graph, p));
      CHECK(p.hop_vars.size() + 1 == p.hops.size());
    }
  }
}

TEST_CASE("renames pair arguments with parameters") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    Analysis a = analyze(text, name);
    for (const auto &p : a.taint.paths)
      for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) {
        const CpgNode &next = a.graph.node(p.hops[i + 1]);
        if (next.kind != NodeKind::Parameter || next.function == a.graph.node(p.hops[i]).function)
          continue;
        const FunctionInfo &callee = a.graph.function_of(next.id);
        CHECK(p.hop_vars[i + 1] == callee.ast->parameters.at(static_cast<std::size_t>(next.param_index)).name);
        bool matched = false;
        for (const auto &c : a.graph.node(p.hops[i]).calls)
          if (next.param_index < static_cast<int>(c.args.size())) {
            const auto &reads = c.args[static_cast<std::size_t>(next.param_index)].value_reads;
            matched = matched || std::count(reads.begin(), reads.end(), p.hop_vars[i]) > 0;
          }
        CHECK(matched);
      }
  }
}

TEST_CASE("constant sink arguments have no paths") {
  Analysis a = analyze("void f(char *d, char *s) { memcpy(d, s, 16); }\n");
  REQUIRE(a.taint.sinks.size() == 1);
  CHECK(a.taint.paths.empty());
  CHECK(analyze("int add(int a, int b) { return a + b; }\n").taint.sinks.empty());
}

TEST_CASE("format string sinks") {
  Analysis a = analyze("void f(char *buf) { printf(buf); printf(\"%d\", 3); printf(\"%s\", buf); }\n");
  REQUIRE(a.taint.sinks.size() == 1);
  CHECK(a.taint.sinks[0].vuln_class == VulnClass::FormatString);
  REQUIRE(a.taint.passthroughs.size() == 1);
  CHECK(a.taint.passthroughs[0].sensitive_arg_index == 1);
}

TEST_CASE("argv is a source") {
  Analysis a = analyze("int main(int argc, char **argv) {\n"
                       "  char buf[256];\n"
                       "  unsigned long n = strlen(argv[1]);\n"
                       "  memcpy(buf, argv[1], n);\n"
                       "  return 0;\n"
                       "}\n");
  REQUIRE(a.taint.sources.size() == 1);
  CHECK(a.taint.sources[0].source_kind == SourceKind::Argv);
  CHECK(a.taint.pairs.size() == 1);
  CHECK(all_hop_lines(a) == std::set<std::vector<int>>{{1, 3, 4}});
}

TEST_CASE("five tracing cases") {
  // increment, arithmetic, return value, argument out, parameter
  Analysis a = analyze("int get(FILE *f) { int v; fread(&v, 4, 1, f); return v; }\n"
                       "void fill(FILE *f, int *out) { *out = get(f); }\n"
                       "void use(char *d, char *s, int n) { memcpy(d, s, n); }\n"
                       "void top(FILE *f, char *d, char *s) {\n"
                       "  int x;\n"
                       "  fill(f, &x);\n"
                       "  x++;\n"
                       "  int y = x * 2 + 1;\n"
                       "  use(d, s, y);\n"
                       "}\n");
  REQUIRE(a.taint.paths.size() == 1);
  const DataFlowPath &p = a.taint.paths[0];
  CHECK(hop_lines(a.graph, p) == std::vector<int>{1, 1, 2, 6, 7, 8, 9, 3, 3});
  std::set<TraceCase> cases(p.hop_cases.begin(), p.hop_cases.end());
  for (TraceCase c : {TraceCase::IncDec, TraceCase::Arithmetic, TraceCase::ArgumentOut, TraceCase::Parameter})
    CHECK(cases.count(c) == 1);
  CHECK(p.crossed_functions == std::vector<std::string>{"get", "fill", "top", "use"});
}

TEST_CASE("group pairs") {
  CHECK(group_pairs({}).empty());
  Analysis a = analyze(test::running_example_text(), "running_example.c");
  auto pairs = group_pairs(a.taint.paths);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].paths.size() == 4);
}

TEST_CASE("depth budget truncates and flags") {
  TraceConfig tight;
  tight.max_depth = 0;
  Analysis a = analyze(test::running_example_text(), "running_example.c", tight);
  CHECK(a.taint.paths.empty());
  CHECK(a.taint.truncated.size() == 1);
  TraceConfig few;
  few.max_paths = 2;
  Analysis b = analyze(test::running_example_text(), "running_example.c", few);
  CHECK(b.taint.paths.size() == 2);
  CHECK(b.taint.truncated.size() == 1);
}
