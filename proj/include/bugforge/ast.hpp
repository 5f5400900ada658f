#pragma once

#include "bugforge/source.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace bugforge {

enum class ExprKind {
  Identifier,
  IntLiteral,
  FloatLiteral,
  CharLiteral,
  StringLiteral,
  Unary,   // prefix operators, including ++/--, & and *
  Postfix, // x++ / x--
  Binary,
  Assign, // = and compound assignment; `op` holds the operator
  Conditional,
  Call,   // operands[0] is the callee, the rest are arguments
  Index,  // operands[0][operands[1]]
  Member, // operands[0].op or operands[0]->op (arrow == true)
  Cast,   // (type_text) operands[0]
  Sizeof, // sizeof(type_text) or sizeof operands[0]
  Comma,
  InitList,
  Opaque, // statement expressions, asm, _Generic, ...
};

struct Expr {
  ExprKind kind = ExprKind::Opaque;
  std::string op; // operator, identifier name, member name or literal spelling
  std::string type_text;
  bool arrow = false;
  std::vector<std::unique_ptr<Expr>> operands;
  SourceSpan span;
  std::string opaque_reason;

  [[nodiscard]] const Expr &operand(std::size_t i) const { return *operands.at(i); }
};
using ExprPtr = std::unique_ptr<Expr>;

enum class StmtKind {
  Compound,
  Declaration,
  Expression,
  If,
  While,
  DoWhile,
  For,
  Switch,
  Case,
  Default,
  Return,
  Break,
  Continue,
  Labeled,
  Empty,
  Opaque,
};

struct Declarator {
  std::string name;
  std::string type; // specifiers plus pointer/array suffixes, whitespace-normalized
  bool pointer = false;
  bool array = false;
  bool function = false; // a prototype rather than an object
  ExprPtr init;
  SourceSpan span;
};

/// Statement tree node. Layout by kind:
///   Compound            children = statements
///   Declaration         decls
///   Expression, Return  expr (Return may have none)
///   If                  expr = condition, children = {then, [else]}
///   While, DoWhile      expr = condition, children = {body}
///   For                 init (may be null), expr = condition (may be null), step, children = {body}
///   Switch              expr = dispatch value, children = {body}
///   Case                expr = label value, children = {labeled statement}
///   Default, Labeled    children = {labeled statement}; Labeled carries `label`
///   Opaque              opaque_reason; goto target in `label`
struct Stmt {
  StmtKind kind = StmtKind::Empty;
  SourceSpan span;
  ExprPtr expr;
  std::unique_ptr<Stmt> init;
  ExprPtr step;
  std::vector<std::unique_ptr<Stmt>> children;
  std::vector<Declarator> decls;
  std::string label;
  std::string opaque_reason;
};
using StmtPtr = std::unique_ptr<Stmt>;

struct Parameter {
  std::string name;
  std::string type;
  bool pointer = false; // pointer, array or function-pointer typed
  SourceSpan span;
};

struct FunctionAst {
  std::string name;
  std::string return_type;
  std::vector<Parameter> parameters;
  bool variadic = false;
  StmtPtr body; // always a Compound statement
  SourceSpan span;      // whole definition
  SourceSpan body_span; // braces included
};

struct GlobalDecl {
  std::string name;
  std::string type;
  bool is_typedef = false;
  bool is_prototype = false;
  ExprPtr init;
  SourceSpan span;
};

struct SkippedRegion {
  SourceSpan span;
  std::string reason;
};

struct TranslationUnit {
  std::filesystem::path path;
  std::string source;
  std::vector<FunctionAst> functions;
  std::vector<GlobalDecl> globals;
  std::vector<SkippedRegion> skipped_regions;
  // Residual directives inside function bodies; they never split a body but
  // are still reported as unsupported.
  std::vector<SkippedRegion> inline_directives;
  bool unbalanced = false;

  [[nodiscard]] const FunctionAst *find_function(std::string_view name) const;
};

/// Calls `fn` for every expression in pre-order.
template <typename Fn> void visit_expr(const Expr &e, Fn &&fn) {
  fn(e);
  for (const auto &op : e.operands)
    if (op)
      visit_expr(*op, fn);
}

/// Calls `fn` for every statement in pre-order (labels and cases included).
template <typename Fn> void visit_stmt(const Stmt &s, Fn &&fn) {
  fn(s);
  if (s.init)
    visit_stmt(*s.init, fn);
  for (const auto &c : s.children)
    if (c)
      visit_stmt(*c, fn);
}

/// Calls `fn` on every top-level expression owned directly by `s`.
template <typename Fn> void for_each_own_expr(const Stmt &s, Fn &&fn) {
  if (s.expr)
    fn(*s.expr);
  if (s.step)
    fn(*s.step);
  for (const auto &d : s.decls)
    if (d.init)
      fn(*d.init);
}

} // namespace bugforge
