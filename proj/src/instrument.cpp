#include "bugforge/instrument.hpp"

#include "bugforge/frontend.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace bugforge {

const char *to_string(InstrumentationClass c) {
  switch (c) {
  case InstrumentationClass::RemoveMechanism: return "RemoveMechanism";
  case InstrumentationClass::SurroundAlwaysFalse: return "SurroundAlwaysFalse";
  case InstrumentationClass::SurroundAlwaysTrue: return "SurroundAlwaysTrue";
  case InstrumentationClass::ArithmeticInfluence: return "ArithmeticInfluence";
  case InstrumentationClass::MoveToUnrelatedPath: return "MoveToUnrelatedPath";
  case InstrumentationClass::SwapCheckAndSink: return "SwapCheckAndSink";
  case InstrumentationClass::IntegerOverflowAntiPattern: return "IntegerOverflowAntiPattern";
  case InstrumentationClass::FormatStringAntiPattern: return "FormatStringAntiPattern";
  }
  return "?";
}

std::optional<InstrumentationClass> parse_instrumentation_class(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(InstrumentationClass::FormatStringAntiPattern); ++i) {
    auto c = static_cast<InstrumentationClass>(i);
    if (s == to_string(c))
      return c;
  }
  return std::nullopt;
}

const char *to_string(SkipReason r) {
  return r == SkipReason::NotSecurityCritical ? "NotSecurityCritical" : "NotUnderstood";
}

const char *to_string(ApplyError e) {
  switch (e) {
  case ApplyError::None: return "None";
  case ApplyError::SpanMismatch: return "SpanMismatch";
  case ApplyError::ReparseFailure: return "ReparseFailure";
  case ApplyError::NoCandidates: return "NoCandidates";
  }
  return "?";
}

namespace {

const char *unsupported_in_condition(const Expr &e) {
  const char *bad = nullptr;
  visit_expr(e, [&](const Expr &x) {
    if (bad)
      return;
    switch (x.kind) {
    case ExprKind::Opaque: bad = "opaque construct"; break;
    case ExprKind::Call: bad = "function call"; break;
    case ExprKind::Assign: bad = "assignment"; break;
    case ExprKind::Postfix: bad = "increment or decrement"; break;
    case ExprKind::Comma: bad = "comma operator"; break;
    case ExprKind::InitList: bad = "initializer list"; break;
    case ExprKind::Unary:
      if (x.op == "++" || x.op == "--")
        bad = "increment or decrement";
      break;
    default: break;
    }
  });
  return bad;
}

bool has_opaque(const Stmt &s) {
  bool found = false;
  visit_stmt(s, [&](const Stmt &x) {
    if (x.kind == StmtKind::Opaque)
      found = true;
    for_each_own_expr(x, [&](const Expr &e) {
      visit_expr(e, [&](const Expr &y) { found = found || y.kind == ExprKind::Opaque; });
    });
  });
  return found;
}

struct Parent {
  const Stmt *compound = nullptr;
  std::size_t index = 0;
};

Parent parent_of(const Stmt &root, const Stmt *target) {
  Parent out;
  visit_stmt(root, [&](const Stmt &s) {
    if (s.kind != StmtKind::Compound)
      return;
    for (std::size_t i = 0; i < s.children.size(); ++i)
      if (s.children[i].get() == target)
        out = {&s, i};
  });
  return out;
}

// Innermost compound statement declaring each local.
std::map<std::string, const Stmt *> declaring_blocks(const Stmt &body) {
  std::map<std::string, const Stmt *> out;
  visit_stmt(body, [&](const Stmt &s) {
    if (s.kind != StmtKind::Compound)
      return;
    for (const auto &c : s.children)
      if (c && c->kind == StmtKind::Declaration)
        for (const auto &d : c->decls)
          out[d.name] = &s;
  });
  return out;
}

std::string hex(std::uint32_t k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", k);
  return buf;
}

bool binds_looser_than_and(const Expr &e) {
  return (e.kind == ExprKind::Binary && e.op == "||") || e.kind == ExprKind::Conditional ||
         e.kind == ExprKind::Comma || e.kind == ExprKind::Assign;
}

bool binds_looser_than_or(const Expr &e) {
  return e.kind == ExprKind::Conditional || e.kind == ExprKind::Comma || e.kind == ExprKind::Assign;
}

bool relational(const std::string &op) { return op == "<" || op == ">" || op == "<=" || op == ">="; }

std::string flip(const std::string &op) {
  if (op == "<") return ">";
  if (op == ">") return "<";
  if (op == "<=") return ">=";
  return "<=";
}

std::optional<long long> literal_value(const Expr &e) {
  if (e.kind != ExprKind::IntLiteral)
    return std::nullopt;
  std::string s = e.op;
  while (!s.empty() && (s.back() == 'u' || s.back() == 'U' || s.back() == 'l' || s.back() == 'L'))
    s.pop_back();
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used, 0);
    if (used != s.size())
      return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

struct Site {
  const CodePropertyGraph &graph;
  const GuardSite &guard;
  const CpgNode &cond;
  const Stmt &stmt;
  const Expr &expr;
  const FunctionInfo &fn;
  const TranslationUnit &unit;
  std::string file;
  Parent parent;
  std::map<std::string, const Stmt *> blocks;

  Site(const CodePropertyGraph &g, const GuardSite &s)
      : graph(g), guard(s), cond(g.node(s.condition_node)), stmt(*cond.stmt), expr(*cond.stmt->expr),
        fn(g.function_of(s.condition_node)), unit(g.unit_of(s.condition_node)), file(unit.path.generic_string()),
        parent(parent_of(*fn.ast->body, cond.stmt)), blocks(declaring_blocks(*fn.ast->body)) {}

  [[nodiscard]] std::string text(const SourceSpan &span) const { return std::string(span.text(unit.source)); }
  [[nodiscard]] bool has_else() const { return stmt.children.size() > 1; }

  [[nodiscard]] bool integer_name(const std::string &name) const {
    auto it = fn.symbols.find(name);
    return it != fn.symbols.end() && it->second.integer;
  }

  [[nodiscard]] bool visible_at(const std::string &name, const SourceSpan &where) const {
    auto it = blocks.find(name);
    if (it == blocks.end())
      return fn.symbols.count(name) && fn.symbols.at(name).is_param;
    return it->second->span.contains(where);
  }

  // Integer locals and parameters holding a value at the condition.
  [[nodiscard]] std::vector<std::string> identifiers() const {
    std::vector<std::string> out;
    for (const auto &[name, sym] : fn.symbols) {
      if (!sym.integer || !visible_at(name, stmt.span))
        continue;
      auto defs = graph.reaching(cond.id, name);
      bool whole = std::any_of(defs.begin(), defs.end(), [&](const DefSite &d) {
        return graph.node(d.node).facts[static_cast<std::size_t>(d.fact)].key == name;
      });
      if (whole)
        out.push_back(name);
    }
    return out;
  }

  [[nodiscard]] Rewrite rewrite(const SourceSpan &span, std::string replacement) const {
    return {file, span.byte_start, span.byte_end, std::move(replacement), span.start_line};
  }
};

void add(std::vector<InstrumentationPlan> &out, const Site &s, InstrumentationClass cls, std::string description,
         std::vector<Rewrite> rewrites) {
  InstrumentationPlan p;
  p.cls = cls;
  p.variant_id = static_cast<int>(std::count_if(out.begin(), out.end(), [&](const auto &q) { return q.cls == cls; }));
  p.description = std::move(description);
  p.target_node = s.cond.id;
  std::sort(rewrites.begin(), rewrites.end(),
            [](const Rewrite &a, const Rewrite &b) { return a.byte_start < b.byte_start; });
  p.rewrites = std::move(rewrites);
  out.push_back(std::move(p));
}

std::string blank(const std::string &text) {
  std::string out = text;
  for (char &c : out)
    if (c != '\n' && c != '\r')
      c = ' ';
  return out;
}

void weaken_comparison(std::vector<InstrumentationPlan> &out, const Site &s) {
  const Expr &e = s.expr;
  if (e.kind != ExprKind::Binary || !relational(e.op))
    return;
  bool literal_left = e.operand(0).kind == ExprKind::IntLiteral;
  const Expr &var = e.operand(literal_left ? 1 : 0);
  const Expr &bound = e.operand(literal_left ? 0 : 1);
  std::string op = literal_left ? flip(e.op) : e.op;
  auto k = literal_value(bound);
  if (!k || *k <= 0)
    return;
  bool upper = s.guard.polarity == Polarity::MustBeFalseToPass ? (op == ">" || op == ">=")
                                                               : (op == "<" || op == "<=");
  if (!upper)
    return;
  auto cls = InstrumentationClass::ArithmeticInfluence;
  add(out, s, cls, "double bound literal", {s.rewrite(bound.span, std::to_string(*k * 2))});
  add(out, s, cls, "double bound by product", {s.rewrite(bound.span, s.text(bound.span) + "*2")});
  if (var.kind != ExprKind::Identifier || !s.integer_name(var.op))
    return;
  add(out, s, cls, "halve operand", {s.rewrite(var.span, var.op + "/2")});
  // a signed char never exceeds 127
  long long need = (op == ">" || op == "<=") ? 127 : 128;
  if (*k >= need)
    add(out, s, cls, "narrow operand to signed char", {s.rewrite(var.span, "(signed char)" + var.op)});
}

bool has_integer_comparison(const Site &s) {
  bool found = false;
  visit_expr(s.expr, [&](const Expr &x) {
    if (x.kind != ExprKind::Binary || !(relational(x.op) || x.op == "==" || x.op == "!="))
      return;
    for (const auto &side : x.operands)
      if (side->kind == ExprKind::IntLiteral || side->kind == ExprKind::CharLiteral ||
          (side->kind == ExprKind::Identifier && s.integer_name(side->op)))
        found = true;
  });
  return found;
}

void overflow_antipattern(std::vector<InstrumentationPlan> &out, const Site &s) {
  const Expr &e = s.expr;
  if (e.kind != ExprKind::Binary || !relational(e.op))
    return;
  for (int side = 0; side < 2; ++side) {
    const Expr &diff = e.operand(static_cast<std::size_t>(side));
    const Expr &other = e.operand(static_cast<std::size_t>(1 - side));
    if (diff.kind != ExprKind::Binary || diff.op != "-")
      continue;
    const Expr &minuend = diff.operand(0);
    const Expr &subtrahend = diff.operand(1);
    for (const Expr *x : {&minuend, &subtrahend, &other})
      if (x->kind == ExprKind::Identifier && !s.integer_name(x->op))
        return;
    // `o op m - t` becomes `o + t op m`: the sum may wrap where the difference could not
    std::string o = s.text(other.span), m = s.text(minuend.span), t = s.text(subtrahend.span);
    std::string moved = side == 1 ? o + " + " + t + " " + e.op + " " + m : m + " " + e.op + " " + o + " + " + t;
    add(out, s, InstrumentationClass::IntegerOverflowAntiPattern, "move subtraction into a sum",
        {s.rewrite(e.span, moved)});
  }
}

void move_to_unrelated(std::vector<InstrumentationPlan> &out, const Site &s, const std::set<NodeId> &corridor) {
  std::string body = s.text(s.stmt.span);
  if (body.find("//") != std::string::npos || body.find('#') != std::string::npos)
    return;
  std::string one_line = body;
  std::replace(one_line.begin(), one_line.end(), '\n', ' ');
  std::replace(one_line.begin(), one_line.end(), '\r', ' ');
  std::set<std::string> names;
  visit_expr(s.expr, [&](const Expr &x) {
    if (x.kind == ExprKind::Identifier)
      names.insert(x.op);
  });
  std::vector<const Stmt *> blocks;
  visit_stmt(*s.fn.ast->body, [&](const Stmt &x) {
    if (x.kind != StmtKind::If)
      return;
    for (const auto &c : x.children)
      if (c && c->kind == StmtKind::Compound)
        blocks.push_back(c.get());
  });
  for (const Stmt *b : blocks) {
    if (b->span.byte_start <= s.stmt.span.byte_end)
      continue;
    bool touches = std::any_of(s.fn.nodes.begin(), s.fn.nodes.end(), [&](NodeId id) {
      return corridor.count(id) && b->span.contains(s.graph.node(id).span);
    });
    if (touches)
      continue;
    bool visible = std::all_of(names.begin(), names.end(), [&](const std::string &n) {
      return !s.fn.symbols.count(n) || s.visible_at(n, b->span);
    });
    if (!visible)
      continue;
    SourceSpan open = b->span;
    open.byte_end = open.byte_start + 1;
    add(out, s, InstrumentationClass::MoveToUnrelatedPath, "move check into an unrelated block at line " +
                                                                std::to_string(b->span.start_line),
        {s.rewrite(s.stmt.span, blank(body)), s.rewrite(open, "{ " + one_line + " ")});
  }
}

void swap_with_sink(std::vector<InstrumentationPlan> &out, const Site &s, const SinkSite &sink) {
  const Stmt &block = *s.parent.compound;
  if (s.parent.index + 1 >= block.children.size())
    return;
  const Stmt &next = *block.children[s.parent.index + 1];
  const CpgNode &call = s.graph.node(sink.call_node);
  if (call.stmt != &next || (next.kind != StmtKind::Expression && next.kind != StmtKind::Declaration))
    return;
  if (has_opaque(next) || call.calls.size() != 1)
    return;
  for (const auto &f : call.facts)
    for (const auto &u : s.cond.uses)
      if (keys_overlap(f.key, u))
        return;
  add(out, s, InstrumentationClass::SwapCheckAndSink, "place the sink before the check",
      {s.rewrite(s.stmt.span, s.text(next.span)), s.rewrite(next.span, s.text(s.stmt.span))});
}

} // namespace

Bugdoorability is_bugdoorable(const CodePropertyGraph &graph, const GuardSite &site) {
  auto no = [](SkipReason r, std::string detail) { return Bugdoorability{false, r, std::move(detail)}; };
  switch (site.classification) {
  case GuardClass::NonAbortingCheck: return no(SkipReason::NotSecurityCritical, "alternative branch continues");
  case GuardClass::Sanitization: return no(SkipReason::NotSecurityCritical, "sanitizations are not instrumented");
  case GuardClass::UnrecognizedMechanism: return no(SkipReason::NotUnderstood, "unrecognized mechanism");
  case GuardClass::AbortingCheck: break;
  }
  if (site.polarity == Polarity::Unknown)
    return no(SkipReason::NotUnderstood, "unknown polarity");
  const CpgNode &cond = graph.node(site.condition_node);
  if (!cond.stmt || cond.stmt->kind != StmtKind::If || !cond.stmt->expr)
    return no(SkipReason::NotUnderstood, "not an if statement");
  if (const char *bad = unsupported_in_condition(*cond.stmt->expr))
    return no(SkipReason::NotUnderstood, std::string("condition contains ") + bad);
  if (has_opaque(*cond.stmt))
    return no(SkipReason::NotUnderstood, "statement contains an opaque construct");
  const TranslationUnit &unit = graph.unit_of(site.condition_node);
  for (const auto &r : unit.skipped_regions)
    if (r.span.overlaps(cond.stmt->span))
      return no(SkipReason::NotUnderstood, "overlaps a skipped region");
  return {true, std::nullopt, ""};
}

std::vector<InstrumentationPlan> enumerate_plans(const CodePropertyGraph &graph, const GuardSite &site,
                                                 const SinkSite &sink, const std::set<NodeId> &corridor) {
  std::vector<InstrumentationPlan> out;
  if (!is_bugdoorable(graph, site).bugdoorable)
    return out;
  Site s(graph, site);
  bool plain = !site.gating && !s.has_else() && s.parent.compound;
  std::vector<std::string> idents = s.identifiers();
  std::string cond = s.text(s.expr.span);

  if (plain)
    add(out, s, InstrumentationClass::RemoveMechanism, "blank the check", {s.rewrite(s.stmt.span, blank(s.text(s.stmt.span)))});

  if (plain && site.polarity == Polarity::MustBeFalseToPass)
    for (const auto &v : idents)
      for (std::uint32_t k : kMagicConstants)
        add(out, s, InstrumentationClass::SurroundAlwaysFalse, "nest under " + v + " == " + hex(k),
            {s.rewrite(s.stmt.span, "if (" + v + " == " + hex(k) + ") { " + s.text(s.stmt.span) + " }")});

  if (site.polarity == Polarity::MustBeTrueToPass) {
    std::string e = binds_looser_than_or(s.expr) ? "(" + cond + ")" : cond;
    for (const auto &v : idents)
      for (std::uint32_t k : kMagicConstants)
        add(out, s, InstrumentationClass::SurroundAlwaysTrue, "disjoin " + v + " != " + hex(k),
            {s.rewrite(s.expr.span, v + " != " + hex(k) + " || " + e)});
  }

  if (has_integer_comparison(s)) {
    if (site.polarity == Polarity::MustBeFalseToPass) {
      std::string e = binds_looser_than_and(s.expr) ? "(" + cond + ")" : cond;
      for (const auto &v : idents)
        for (std::uint32_t k : kMagicConstants)
          add(out, s, InstrumentationClass::ArithmeticInfluence, "conjoin " + v + " == " + hex(k),
              {s.rewrite(s.expr.span, v + " == " + hex(k) + " && " + e)});
    }
    weaken_comparison(out, s);
  }

  if (plain)
    move_to_unrelated(out, s, corridor);
  if (plain)
    swap_with_sink(out, s, sink);
  overflow_antipattern(out, s);

  std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.cls < b.cls; });
  return out;
}

std::vector<ClassVariants> applicable_instrumentations(const CodePropertyGraph &graph, const GuardSite &site,
                                                       const SinkSite &sink, const std::set<NodeId> &corridor) {
  std::vector<ClassVariants> out;
  for (const auto &p : enumerate_plans(graph, site, sink, corridor)) {
    if (out.empty() || out.back().cls != p.cls)
      out.push_back({p.cls, 0});
    ++out.back().variants;
  }
  return out;
}

std::optional<InstrumentationPlan> format_string_antipattern(const CodePropertyGraph &graph, const SinkSite &sink) {
  const CpgNode &n = graph.node(sink.call_node);
  if (sink.call_index < 0 || sink.call_index >= static_cast<int>(n.calls.size()))
    return std::nullopt;
  const CallInfo &call = n.calls[static_cast<std::size_t>(sink.call_index)];
  auto fmt = static_cast<std::size_t>(sink.sensitive_arg_index - 1);
  if (sink.sensitive_arg_index < 1 || call.args.size() != fmt + 2)
    return std::nullopt;
  const ArgInfo &f = call.args[fmt];
  if (!f.string_literal || !f.expr || f.expr->op != "\"%s\"" || !call.args[fmt + 1].expr)
    return std::nullopt;
  const TranslationUnit &unit = graph.unit_of(sink.call_node);
  InstrumentationPlan p;
  p.cls = InstrumentationClass::FormatStringAntiPattern;
  p.description = "drop the literal format";
  p.target_node = sink.call_node;
  p.rewrites.push_back({unit.path.generic_string(), f.expr->span.byte_start, call.args[fmt + 1].expr->span.byte_start,
                        "", f.expr->span.start_line});
  return p;
}

std::string apply_rewrites(const std::string &text, const std::vector<Rewrite> &rewrites) {
  std::vector<Rewrite> order = rewrites;
  std::sort(order.begin(), order.end(), [](const Rewrite &a, const Rewrite &b) { return a.byte_start > b.byte_start; });
  std::string out = text;
  for (const auto &r : order)
    out.replace(r.byte_start, r.byte_end - r.byte_start, r.replacement);
  return out;
}

AppliedPlan choose_and_apply(const CodePropertyGraph &graph, const std::vector<InstrumentationPlan> &candidates,
                             std::uint64_t seed, const std::map<std::string, std::string> &files) {
  AppliedPlan out;
  std::vector<int> remaining(candidates.size());
  for (std::size_t i = 0; i < remaining.size(); ++i)
    remaining[i] = static_cast<int>(i);
  std::mt19937_64 rng(seed);
  while (!remaining.empty()) {
    std::size_t pick = static_cast<std::size_t>(rng() % remaining.size());
    int index = remaining[pick];
    const InstrumentationPlan &plan = candidates[static_cast<std::size_t>(index)];
    if (plan.rewrites.empty()) {
      out.error = ApplyError::NoCandidates;
      return out;
    }
    const std::string &file = plan.rewrites.front().file;
    const TranslationUnit *unit = nullptr;
    for (const auto &u : graph.units)
      if (u->path.generic_string() == file)
        unit = u.get();
    auto it = files.find(file);
    bool matches = unit && it != files.end();
    for (const auto &r : plan.rewrites)
      matches = matches && r.file == file && r.byte_end <= it->second.size() && r.byte_end <= unit->source.size() &&
                it->second.compare(r.byte_start, r.byte_end - r.byte_start, unit->source, r.byte_start,
                                   r.byte_end - r.byte_start) == 0;
    if (!matches) {
      out.error = ApplyError::SpanMismatch;
      return out;
    }
    std::string rewritten = apply_rewrites(it->second, plan.rewrites);
    TranslationUnit before = parse_unit(it->second, unit->path);
    TranslationUnit after = parse_unit(rewritten, unit->path);
    if (after.unbalanced || after.functions.size() != before.functions.size() ||
        supported_subset_report(after).size() > supported_subset_report(before).size()) {
      out.rejected_variants.push_back(index);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
      continue;
    }
    std::size_t lo = plan.rewrites.front().byte_start, hi = 0;
    long long delta = 0;
    for (const auto &r : plan.rewrites) {
      lo = std::min(lo, r.byte_start);
      hi = std::max(hi, r.byte_end);
      delta += static_cast<long long>(r.replacement.size()) - static_cast<long long>(r.byte_end - r.byte_start);
    }
    out.plan = plan;
    out.plan.rng_seed = seed;
    out.file = file;
    out.original_snippet = it->second.substr(lo, hi - lo);
    out.rewritten_snippet = rewritten.substr(lo, static_cast<std::size_t>(static_cast<long long>(hi - lo) + delta));
    out.rewritten_text = std::move(rewritten);
    out.error = ApplyError::None;
    return out;
  }
  out.error = candidates.empty() ? ApplyError::NoCandidates : ApplyError::ReparseFailure;
  return out;
}

} // namespace bugforge
