#include <doctest.h>

#include "bugforge/interproc.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <random>

using namespace bugforge;
using test::graph_of;
using test::node_at;

namespace {

SummaryMap glibc() { return load_external_summaries(test::glibc_summaries()).summaries; }

std::vector<std::string> status_names(const FunctionSummary &s) {
  std::vector<std::string> out;
  for (auto st : s.param_modified)
    out.emplace_back(to_string(st));
  return out;
}

bool has_edge(const CallGraph &cg, const std::string &a, const std::string &b) {
  return std::any_of(cg.edges.begin(), cg.edges.end(), [&](const CallEdge &e) { return e.caller == a && e.callee == b; });
}

std::size_t position(const std::vector<std::string> &order, const std::string &name) {
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), name) - order.begin());
}

} // namespace

TEST_CASE("summary file parsing") {
  SummaryMap s = glibc();
  REQUIRE(s.count("memcpy"));
  const FunctionSummary &m = s.at("memcpy");
  CHECK(m.external);
  CHECK(status_names(m) == std::vector<std::string>{"Yes", "No", "No"});
  CHECK(m.transfers_into(0) == std::vector<int>{1});
  REQUIRE(m.sink_spec());
  CHECK(m.sink_spec()->param == 2);
  CHECK(m.sink_spec()->vuln_class == VulnClass::BufferLength);

  const FunctionSummary &f = s.at("fread");
  CHECK(f.status(0) == ParamStatus::Yes);
  REQUIRE(f.source_kind);
  CHECK(*f.source_kind == SourceKind::File);
  CHECK(f.controls(0));
  CHECK_FALSE(f.controls(3));
  CHECK(s.at("exit").terminal);
  CHECK(s.at("printf").variadic);

  CHECK(parse_summaries("").summaries.empty());
  CHECK(parse_summaries("# only a comment\n\n").summaries.empty());
}

TEST_CASE("summary parse errors carry line numbers") {
  try {
    parse_summaries("ok p0=N\n\nbad p0=Q\n", "x.summ");
    FAIL("expected a parse error");
  } catch (const SummaryParseError &e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("x.summ:3") == 0);
  }
  CHECK_THROWS_AS(parse_summaries("f p1=N\n"), SummaryParseError);
  CHECK_THROWS_AS(parse_summaries("f p0=Y,sink=nonsense\n"), SummaryParseError);
  CHECK_THROWS_AS(parse_summaries("f p0\n"), SummaryParseError);
  SummaryLoad dup = parse_summaries("f p0=N\nf p0=Y\n");
  CHECK(dup.warnings.size() == 1);
  CHECK(dup.summaries.at("f").status(0) == ParamStatus::Yes);
}

TEST_CASE("summary format round trip") {
  SummaryMap s = glibc();
  for (const auto &[name, sum] : s) {
    SummaryLoad again = parse_summaries(format_summary(sum));
    REQUIRE(again.summaries.count(name));
    CHECK(again.summaries.at(name) == sum);
  }
}

TEST_CASE("running example call graph and order") {
  CodePropertyGraph g = graph_of(test::running_example_text(), "running_example.c");
  InterprocResult r = run_interproc(g, glibc());
  const CallGraph &cg = r.call_graph;
  CHECK(has_edge(cg, "copy_buffer", "wrapper"));
  CHECK(has_edge(cg, "copy_buffer", "read_from_file"));
  CHECK(has_edge(cg, "wrapper", "read_from_file"));
  CHECK(has_edge(cg, "read_from_file", "fread"));
  CHECK(cg.broken_edges.empty());
  for (const auto &e : cg.edges)
    CHECK(e.external == (g.function(e.callee) == nullptr));
  CHECK(r.order == std::vector<std::string>{"do_something_with", "exit", "fread", "memcpy", "memset", "printf",
                                            "read_from_file", "wrapper", "copy_buffer"});
}

TEST_CASE("running example summaries") {
  CodePropertyGraph g = graph_of(test::running_example_text(), "running_example.c");
  InterprocResult r = run_interproc(g, glibc());
  CHECK(status_names(r.summaries.at("wrapper")) == std::vector<std::string>{"No", "Yes"});
  CHECK(status_names(r.summaries.at("read_from_file")) == std::vector<std::string>{"Maybe"});
  CHECK(r.summaries.at("copy_buffer").external == false);
  CHECK(r.summaries.at("memcpy").external);
  CHECK(r.warnings.empty());

  // After augmentation, the wrapper calls define len definitely and strongly.
  NodeId sink = node_at(g, "copy_buffer", 30);
  std::set<int> lines;
  for (const auto &d : g.reaching(sink, "len"))
    lines.insert(g.node(d.node).span.start_line);
  CHECK(lines == std::set<int>{16, 17, 20, 21});
  bool strong = false;
  for (const auto &n : g.nodes)
    if (n.function == "copy_buffer" && n.span.start_line == 16)
      for (const auto &f : n.facts)
        if (f.origin == DefOrigin::CallOut && f.key == "len")
          strong = f.strong && f.definite;
  CHECK(strong);
}

TEST_CASE("self recursion is broken") {
  CodePropertyGraph g = graph_of("int f(int n) { if (n) return f(n - 1); return 0; }\n");
  CallGraph cg = build_call_graph(g);
  REQUIRE(cg.break_steps.size() == 1);
  CHECK(cg.break_steps[0].function == "f");
  CHECK(cg.is_broken("f", "f"));
  CHECK(topological_order(cg) == std::vector<std::string>{"f"});
}

TEST_CASE("two-cycle breaks at the function with fewer calls") {
  const char *text = "void g(int *p);\n"
                     "void f(int *p) { if (*p) g(p); }\n"
                     "void g(int *p) { *p = *p - 1; f(p); f(p); }\n";
  CodePropertyGraph g = graph_of(text);
  CallGraph cg = build_call_graph(g);
  REQUIRE(cg.break_steps.size() == 1);
  CHECK(cg.break_steps[0].function == "f");
  CHECK(cg.break_steps[0].scc == std::vector<std::string>{"f", "g"});
  CHECK(cg.is_broken("f", "g"));
  CHECK_FALSE(cg.is_broken("g", "f"));
  CHECK(topological_order(cg) == std::vector<std::string>{"f", "g"});

  InterprocResult r = run_interproc(g, {});
  CHECK(r.summaries.at("g").status(0) == ParamStatus::Yes);
  CHECK_FALSE(r.summaries.at("f").confident);
}

TEST_CASE("function pointers resolve to address-taken functions") {
  const char *text = "void handler(int *p) { *p = 1; }\n"
                     "void other(int *p) { }\n"
                     "void run(void (*cb)(int *), int *x) { cb(x); }\n"
                     "void main_(int *x) { run(handler, x); }\n";
  CodePropertyGraph g = graph_of(text);
  PointerTargets t = resolve_function_pointers(g);
  REQUIRE(t.size() == 1);
  CHECK(t.begin()->second == std::set<std::string>{"handler"});
  InterprocResult r = run_interproc(g, {});
  CHECK(has_edge(r.call_graph, "run", "handler"));
  CHECK_FALSE(has_edge(r.call_graph, "run", "other"));
  CHECK(r.summaries.at("run").status(1) == ParamStatus::Yes);
  CHECK(std::any_of(g.edges.begin(), g.edges.end(), [&](const CpgEdge &e) {
    return e.kind == EdgeKind::CallsTo && e.dst == g.function("handler")->entry;
  }));

  const char *two = "void f(int *p) { *p = 1; }\n"
                    "void g(int *p) { }\n"
                    "void (*table[2])(int *) = { f, g };\n"
                    "void run(int i, int *x) { table[i](x); }\n";
  CodePropertyGraph g2 = graph_of(two);
  PointerTargets t2 = resolve_function_pointers(g2);
  REQUIRE(t2.size() == 1);
  CHECK(t2.begin()->second == std::set<std::string>{"f", "g"});
  InterprocResult r2 = run_interproc(g2, {});
  CHECK(r2.summaries.at("run").status(1) == ParamStatus::Maybe);
}

TEST_CASE("indirect call without candidates warns") {
  CodePropertyGraph g = graph_of("void run(void (*cb)(int *), int *x) { cb(x); }\n");
  InterprocResult r = run_interproc(g, {});
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].code == "MissingSummary");
  CHECK(r.summaries.at("run").status(1) == ParamStatus::Maybe);
}

TEST_CASE("parameter status rules") {
  const char *text = "void set(int *p) { *p = 0; }\n"
                     "void cond(int *p, int c) { if (c) *p = 0; }\n"
                     "void both(int *p, int c) { if (c) *p = 0; else *p = 1; }\n"
                     "void bail(int *p, int c) { if (c) exit(1); *p = 2; }\n"
                     "void read_only(int *p, int *q) { *q = *p; }\n"
                     "void via(int *p) { set(p); }\n"
                     "void via_cond(int *p) { cond(p, 1); }\n"
                     "void unknown(int *p) { mystery(p); }\n"
                     "void scalar(int n) { n = 3; }\n"
                     "int id(int a) { return a; }\n"
                     "int twice(int a, int b) { int t = a; return id(t); }\n";
  CodePropertyGraph g = graph_of(text);
  InterprocResult r = run_interproc(g, glibc());
  auto st = [&](const char *f, int i) { return r.summaries.at(f).status(i); };
  CHECK(st("set", 0) == ParamStatus::Yes);
  CHECK(st("cond", 0) == ParamStatus::Maybe);
  CHECK(st("both", 0) == ParamStatus::Yes);
  CHECK(st("bail", 0) == ParamStatus::Yes);
  CHECK(st("read_only", 0) == ParamStatus::No);
  CHECK(st("read_only", 1) == ParamStatus::Yes);
  CHECK(st("via", 0) == ParamStatus::Yes);
  CHECK(st("via_cond", 0) == ParamStatus::No); // an internal maybe does not propagate
  CHECK(st("unknown", 0) == ParamStatus::Maybe);
  CHECK(st("scalar", 0) == ParamStatus::No);
  CHECK(r.summaries.at("id").returns_param_data == std::vector<int>{0});
  CHECK(r.summaries.at("twice").returns_param_data == std::vector<int>{0});
  CHECK(r.summaries.at("read_only").param_transfers == std::vector<Transfer>{{0, 1}});
}

TEST_CASE("external summaries are never overwritten") {
  const char *text = "void *memcpy(void *d, const void *s, unsigned long n) { return d; }\n"
                     "void f(char *a, char *b) { memcpy(a, b, 4); }\n";
  CodePropertyGraph g = graph_of(text);
  SummaryMap ext = glibc();
  InterprocResult r = run_interproc(g, ext);
  CHECK(r.summaries.at("memcpy") == ext.at("memcpy"));
  CHECK(r.summaries.at("f").status(0) == ParamStatus::Yes);
}

// Hand-built call graphs: every break step picks the minimum (calls, name) of
// its component, and the order puts callees first.
TEST_CASE("cycle breaking properties on random graphs") {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 200; ++round) {
    int n = 2 + static_cast<int>(rng() % 7);
    CallGraph cg;
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
      names.push_back("f" + std::to_string(i));
      cg.nodes.insert(names.back());
      cg.call_count[names.back()] = static_cast<int>(rng() % 4);
    }
    std::set<std::pair<int, int>> used;
    int m = static_cast<int>(rng() % static_cast<unsigned>(n * n));
    for (int k = 0; k < m; ++k) {
      int a = static_cast<int>(rng() % static_cast<unsigned>(n)), b = static_cast<int>(rng() % static_cast<unsigned>(n));
      if (!used.insert({a, b}).second)
        continue;
      cg.edges.push_back({names[static_cast<std::size_t>(a)], names[static_cast<std::size_t>(b)], {}, false});
    }
    break_cycles(cg);
    for (const auto &step : cg.break_steps) {
      auto key = [&](const std::string &f) { return std::make_pair(cg.call_count[f], f); };
      for (const auto &member : step.scc)
        CHECK(key(step.function) <= key(member));
      for (const auto &e : step.removed) {
        CHECK(e.caller == step.function);
        CHECK(std::count(step.scc.begin(), step.scc.end(), e.callee) == 1);
      }
    }
    std::vector<std::string> order = topological_order(cg);
    REQUIRE(order.size() == cg.nodes.size());
    for (const auto &e : cg.edges)
      if (!cg.is_broken(e.caller, e.callee))
        CHECK(position(order, e.callee) < position(order, e.caller));
    // Breaking an acyclic result again changes nothing.
    std::size_t before = cg.broken_edges.size();
    break_cycles(cg);
    CHECK(cg.broken_edges.size() == before);
  }
}

TEST_CASE("summaries are stable and deterministic over the corpora") {
  SummaryMap ext = glibc();
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    CodePropertyGraph a = graph_of(text, name);
    CodePropertyGraph b = graph_of(text, name);
    InterprocResult ra = run_interproc(a, ext);
    InterprocResult rb = run_interproc(b, ext);
    CHECK(ra.summaries == rb.summaries);
    CHECK(ra.order == rb.order);
    CHECK(a.dump() == b.dump());
    // Re-running on the augmented graph reaches the same summaries.
    InterprocResult again = run_interproc(a, ext);
    CHECK(again.summaries == ra.summaries);
  }
}

TEST_CASE("more modification never lowers a caller") {
  // Upgrading a callee from No to Maybe to Yes never moves a caller from Yes down.
  const char *text = "void callee(int *p);\n"
                     "void caller(int *p) { callee(p); }\n";
  CodePropertyGraph g = graph_of(text);
  auto caller_status = [&](const char *line) {
    CodePropertyGraph copy = g;
    InterprocResult r = run_interproc(copy, parse_summaries(line).summaries);
    return r.summaries.at("caller").status(0);
  };
  CHECK(caller_status("callee p0=N") == ParamStatus::No);
  CHECK(caller_status("callee p0=M") == ParamStatus::Maybe);
  CHECK(caller_status("callee p0=Y") == ParamStatus::Yes);
}
