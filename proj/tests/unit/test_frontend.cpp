#include <doctest.h>

#include "bugforge/frontend.hpp"
#include "test_support.hpp"

#include <set>

using namespace bugforge;

namespace {

void collect_statement_spans(const Stmt &s, std::vector<SourceSpan> &out) {
  visit_stmt(s, [&](const Stmt &x) { out.push_back(x.span); });
}

} // namespace

TEST_CASE("running example parses into its three functions") {
  TranslationUnit unit = parse_unit(test::running_example_text(), "running_example.c");
  REQUIRE(unit.functions.size() == 3);
  CHECK(unit.functions[0].name == "read_from_file");
  CHECK(unit.functions[1].name == "wrapper");
  CHECK(unit.functions[2].name == "copy_buffer");
  CHECK(unit.skipped_regions.empty());
  CHECK(supported_subset_report(unit).empty());

  const FunctionAst &cb = unit.functions[2];
  REQUIRE(cb.parameters.size() == 5);
  CHECK(cb.parameters[0].name == "f_true");
  CHECK(cb.parameters[0].pointer);
  CHECK(cb.parameters[3].name == "which_file");
  CHECK_FALSE(cb.parameters[3].pointer);
  // Line markers map the definition back to the original listing numbering.
  CHECK(unit.functions[0].span.start_line == 1);
  CHECK(unit.functions[1].span.start_line == 7);
  CHECK(cb.span.start_line == 11);
  CHECK(cb.span.end_line == 33);
  CHECK(cb.span.file == "running_example.c");
}

TEST_CASE("empty input") {
  TranslationUnit unit = parse_unit("", "empty.c");
  CHECK(unit.functions.empty());
  CHECK(unit.skipped_regions.empty());
  CHECK_FALSE(unit.unbalanced);
}

TEST_CASE("inline asm becomes an opaque statement with exact spans") {
  std::string text = "int plain(int a) { return a + 1; }\n"
                     "int fenced(int b) {\n"
                     "  int c = b;\n"
                     "  __asm__ volatile (\"nop\" : : : \"memory\");\n"
                     "  return c;\n"
                     "}\n";
  TranslationUnit unit = parse_unit(text, "asm.c");
  REQUIRE(unit.functions.size() == 2);
  const Stmt &body = *unit.functions[1].body;
  REQUIRE(body.children.size() == 3);
  CHECK(body.children[1]->kind == StmtKind::Opaque);
  CHECK(body.children[1]->opaque_reason == kReasonAsm);
  CHECK(body.children[1]->span.text(text) == "__asm__ volatile (\"nop\" : : : \"memory\");");
  CHECK(body.children[0]->span.text(text) == "int c = b;");
  CHECK(body.children[2]->span.text(text) == "return c;");

  auto report = supported_subset_report(unit);
  REQUIRE(report.size() == 1);
  CHECK(report[0].span.start_line == 4);
}

TEST_CASE("goto is reported with the fixed reason") {
  std::string text = "int f(int x) {\n  if (x) goto out;\n  x = 2;\nout:\n  return x;\n}\n";
  TranslationUnit unit = parse_unit(text, "goto.c");
  REQUIRE(unit.functions.size() == 1);
  auto report = supported_subset_report(unit);
  REQUIRE(report.size() == 1);
  CHECK(report[0].reason == "goto: modeled as opaque CFG edge");
  CHECK(report[0].span.text(text) == "goto out;");
}

TEST_CASE("residual function-like macro is one skipped entry") {
  std::string text = "#define MAX(a, b) ((a) > (b) ? (a) : (b))\n"
                     "int f(int x) { return x; }\n";
  TranslationUnit unit = parse_unit(text, "macro.c");
  CHECK(unit.functions.size() == 1);
  auto report = supported_subset_report(unit);
  REQUIRE(report.size() == 1);
  CHECK(report[0].span.start_line == 1);
}

TEST_CASE("unbalanced delimiters make the file one skipped region") {
  TranslationUnit unit = parse_unit("int f(void) { if (1) { return; }\n", "broken.c");
  CHECK(unit.unbalanced);
  CHECK(unit.functions.empty());
  CHECK(unit.skipped_regions.size() == 1);
}

TEST_CASE("K&R definitions are skipped") {
  std::string text = "int old(a, b) int a; int b; { return a + b; }\nint modern(int a) { return a; }\n";
  TranslationUnit unit = parse_unit(text, "knr.c");
  REQUIRE(unit.functions.size() == 1);
  CHECK(unit.functions[0].name == "modern");
  REQUIRE(unit.skipped_regions.size() == 1);
  CHECK(unit.skipped_regions[0].reason == "K&R-style definition");
}

TEST_CASE("setjmp and varargs statements are opaque") {
  std::string text = "typedef long jmp_buf[8];\nint setjmp(jmp_buf);\n"
                     "int f(int n, ...) {\n  va_list ap;\n  va_start(ap, n);\n  int v = n;\n  va_end(ap);\n  return v;\n}\n"
                     "int g(jmp_buf b) { if (setjmp(b)) return 1; return 0; }\n";
  TranslationUnit unit = parse_unit(text, "jmp.c");
  REQUIRE(unit.functions.size() == 2);
  std::multiset<std::string> reasons;
  for (const auto &issue : supported_subset_report(unit))
    reasons.insert(issue.reason);
  CHECK(reasons.count(kReasonVarargs) == 2);
  // The setjmp call sits inside an if condition: the enclosing if stays structured.
  CHECK(reasons.count(kReasonSetjmp) == 0);
}

TEST_CASE("statements round-trip byte-exactly") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    TranslationUnit unit = parse_unit(text, name);
    for (const auto &fn : unit.functions) {
      CHECK(!fn.name.empty());
      CHECK(fn.body_span.byte_end <= text.size());
      std::vector<SourceSpan> spans;
      collect_statement_spans(*fn.body, spans);
      for (const auto &s : spans) {
        REQUIRE(s.valid());
        CHECK(s.byte_start < s.byte_end);
        CHECK(s.text(text) == text.substr(s.byte_start, s.byte_end - s.byte_start));
      }
      // Siblings never overlap.
      visit_stmt(*fn.body, [&](const Stmt &st) {
        for (std::size_t i = 0; i + 1 < st.children.size(); ++i)
          if (st.children[i] && st.children[i + 1])
            CHECK(st.children[i]->span.byte_end <= st.children[i + 1]->span.byte_start);
      });
      for (const auto &r : unit.skipped_regions)
        CHECK_FALSE(r.span.overlaps(fn.body_span));
    }
  }
}

TEST_CASE("deleting a function leaves the others unchanged") {
  for (const auto &[name, text] : test::fixture_texts()) {
    CAPTURE(name);
    TranslationUnit unit = parse_unit(text, name);
    for (std::size_t drop = 0; drop < unit.functions.size(); ++drop) {
      const SourceSpan &gone = unit.functions[drop].span;
      std::string edited = text.substr(0, gone.byte_start) + text.substr(gone.byte_end);
      TranslationUnit reduced = parse_unit(edited, name);
      std::vector<std::string> expected, actual;
      for (std::size_t i = 0; i < unit.functions.size(); ++i)
        if (i != drop)
          expected.emplace_back(unit.functions[i].span.text(text));
      for (const auto &fn : reduced.functions)
        actual.emplace_back(fn.span.text(edited));
      CHECK(expected == actual);
    }
  }
}

TEST_CASE("parse is deterministic") {
  std::string text = test::running_example_text();
  TranslationUnit a = parse_unit(text, "x.c");
  TranslationUnit b = parse_unit(text, "x.c");
  REQUIRE(a.functions.size() == b.functions.size());
  for (std::size_t i = 0; i < a.functions.size(); ++i) {
    std::vector<SourceSpan> sa, sb;
    collect_statement_spans(*a.functions[i].body, sa);
    collect_statement_spans(*b.functions[i].body, sb);
    CHECK(sa == sb);
  }
}

TEST_CASE("expressions keep their structure") {
  std::string text = "struct s { int m; };\n"
                     "int f(struct s *p, int *q) { int a = (int)p->m + q[2] * 3; a += sizeof(int); return a > 1 ? a : -a; }\n";
  TranslationUnit unit = parse_unit(text, "e.c");
  REQUIRE(unit.functions.size() == 1);
  const Stmt &decl = *unit.functions[0].body->children[0];
  REQUIRE(decl.kind == StmtKind::Declaration);
  REQUIRE(decl.decls.size() == 1);
  const Expr &init = *decl.decls[0].init;
  CHECK(init.kind == ExprKind::Binary);
  CHECK(init.op == "+");
  CHECK(init.operand(0).kind == ExprKind::Cast);
  CHECK(init.operand(0).operand(0).kind == ExprKind::Member);
  CHECK(init.operand(0).operand(0).arrow);
  CHECK(init.operand(1).op == "*");
  CHECK(init.operand(1).operand(0).kind == ExprKind::Index);
  CHECK(supported_subset_report(unit).empty());
}
