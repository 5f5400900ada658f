#include "bugforge/cpg.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace bugforge {

const char *to_string(NodeKind kind) {
  switch (kind) {
  case NodeKind::Entry: return "Entry";
  case NodeKind::Exit: return "Exit";
  case NodeKind::Parameter: return "Parameter";
  case NodeKind::Statement: return "Statement";
  case NodeKind::Condition: return "Condition";
  case NodeKind::CallSite: return "CallSite";
  case NodeKind::ReturnStmt: return "ReturnStmt";
  case NodeKind::Opaque: return "Opaque";
  }
  return "?";
}

const char *to_string(EdgeKind kind) {
  switch (kind) {
  case EdgeKind::AstChild: return "AstChild";
  case EdgeKind::CfgNext: return "CfgNext";
  case EdgeKind::DfgReaches: return "DfgReaches";
  case EdgeKind::CallsTo: return "CallsTo";
  case EdgeKind::ArgToParam: return "ArgToParam";
  }
  return "?";
}

bool is_terminal_call(std::string_view callee) {
  return callee == "exit" || callee == "abort" || callee == "_exit" || callee == "_Exit";
}

bool keys_overlap(std::string_view a, std::string_view b) {
  if (a.size() > b.size())
    std::swap(a, b);
  return b.substr(0, a.size()) == a && (b.size() == a.size() || b[a.size()] == '.');
}

std::string key_root(std::string_view key) { return std::string(key.substr(0, key.find('.'))); }

std::set<std::string> CpgNode::defs() const {
  std::set<std::string> out;
  for (const auto &f : facts)
    if (f.key != kReturnKey)
      out.insert(f.key);
  return out;
}

bool CpgNode::uses_key(const std::string &key) const {
  return std::any_of(uses.begin(), uses.end(), [&](const std::string &u) { return keys_overlap(u, key); });
}

namespace {

void push_unique(std::vector<std::string> &v, const std::string &s) {
  if (std::find(v.begin(), v.end(), s) == v.end())
    v.push_back(s);
}

void append_unique(std::vector<std::string> &v, const std::vector<std::string> &more) {
  for (const auto &s : more)
    push_unique(v, s);
}

bool integer_type(const std::string &type) {
  static const char *kWords[] = {"int",     "char",   "short",  "long",    "unsigned", "signed", "size_t",
                                 "ssize_t", "off_t",  "int8_t", "int16_t", "int32_t",  "int64_t", "uint8_t",
                                 "uint16_t", "uint32_t", "uint64_t", "_Bool", "bool", "pid_t", "socklen_t"};
  std::istringstream in(type);
  std::string word;
  while (in >> word)
    for (const char *w : kWords)
      if (word == w)
        return true;
  return false;
}

bool is_zero_literal(const Expr &e) {
  if (e.kind == ExprKind::Cast)
    return is_zero_literal(e.operand(0));
  if (e.kind == ExprKind::IntLiteral)
    return e.op == "0" || e.op == "0x0" || e.op == "0X0" || e.op == "0u" || e.op == "0U" || e.op == "0L";
  if (e.kind == ExprKind::CharLiteral)
    return e.op == "'\\0'" || e.op == "'\\x00'" || e.op == "'\\000'";
  return false;
}

const Expr &strip_casts(const Expr &e) { return e.kind == ExprKind::Cast && !e.operands.empty() ? strip_casts(e.operand(0)) : e; }

struct Value {
  std::vector<std::string> reads;
  std::vector<std::string> value_reads;
  std::vector<int> value_calls;

  void merge(const Value &o) {
    append_unique(reads, o.reads);
    append_unique(value_reads, o.value_reads);
    for (int c : o.value_calls)
      if (std::find(value_calls.begin(), value_calls.end(), c) == value_calls.end())
        value_calls.push_back(c);
  }
};

struct LValue {
  std::string key;
  bool strong = false;
  bool definite = true;
  bool through_pointer = false;
  bool indexed = false;
  std::string pointer_base;
};

// Computes facts, uses and calls of one node from its expressions.
class NodeAnalyzer {
public:
  NodeAnalyzer(CpgNode &node, const FunctionInfo &fn, const CodePropertyGraph &graph, const std::set<std::string> &constants)
      : node_(node), fn_(fn), graph_(graph), constants_(constants) {}

  Value analyze(const Expr &e) {
    Value v = analyze_inner(e);
    append_unique(node_.uses, v.reads);
    return v;
  }

  void declaration(const Declarator &d) {
    if (!d.init || d.function)
      return;
    Value v = analyze(*d.init);
    DefFact f;
    f.key = d.name;
    f.origin = DefOrigin::Init;
    f.strong = true;
    f.definite = true;
    f.value_reads = v.value_reads;
    f.value_calls = v.value_calls;
    node_.facts.push_back(std::move(f));
  }

  void returned(const Expr *e) {
    DefFact f;
    f.key = kReturnKey;
    f.origin = DefOrigin::Return;
    f.strong = true;
    f.definite = true;
    if (e) {
      Value v = analyze(*e);
      f.value_reads = v.value_reads;
      f.value_calls = v.value_calls;
    }
    node_.facts.push_back(std::move(f));
  }

private:
  bool is_local(const std::string &name) const { return fn_.symbols.count(name) > 0; }

  bool is_variable(const std::string &name) const {
    if (is_local(name))
      return true;
    if (constants_.count(name))
      return false;
    if (graph_.declared_functions.count(name) && !graph_.globals.count(name))
      return false;
    return true;
  }

  const Symbol *symbol(const std::string &name) const {
    auto it = fn_.symbols.find(name);
    if (it != fn_.symbols.end())
      return &it->second;
    auto g = graph_.globals.find(name);
    return g == graph_.globals.end() ? nullptr : &g->second;
  }

  bool is_pointer_var(const std::string &key) const {
    if (key.find('.') != std::string::npos)
      return false;
    const Symbol *s = symbol(key);
    return s && s->pointer && !s->array;
  }

  bool is_pointer_like(const std::string &key) const {
    if (key.find('.') != std::string::npos)
      return true; // member arrays and pointers are indistinguishable syntactically
    const Symbol *s = symbol(key);
    return s && (s->pointer || s->array);
  }

  Value analyze_inner(const Expr &e) {
    Value v;
    switch (e.kind) {
    case ExprKind::Identifier:
      if (!is_variable(e.op)) {
        if (graph_.declared_functions.count(e.op) && !constants_.count(e.op))
          push_unique(node_.function_refs, e.op);
        return v;
      }
      v.reads = {e.op};
      v.value_reads = {e.op};
      return v;
    case ExprKind::IntLiteral:
    case ExprKind::FloatLiteral:
    case ExprKind::CharLiteral:
    case ExprKind::StringLiteral:
    case ExprKind::Sizeof:
    case ExprKind::Opaque:
      return v;
    case ExprKind::Unary:
      if (e.op == "++" || e.op == "--")
        return inc_dec(e);
      return analyze_inner(e.operand(0));
    case ExprKind::Postfix:
      return inc_dec(e);
    case ExprKind::Assign:
      return assign(e);
    case ExprKind::Call:
      return call(e);
    case ExprKind::Member: {
      LValue lv = lvalue(e);
      if (lv.key.empty())
        return analyze_inner(e.operand(0));
      v = lvalue_side_reads(e.operand(0));
      push_unique(v.reads, lv.key);
      push_unique(v.value_reads, lv.key);
      return v;
    }
    case ExprKind::Comma: {
      for (const auto &op : e.operands) {
        Value part = analyze_inner(*op);
        append_unique(v.reads, part.reads);
        v.value_reads = part.value_reads;
        v.value_calls = part.value_calls;
      }
      return v;
    }
    default:
      for (const auto &op : e.operands)
        if (op)
          v.merge(analyze_inner(*op));
      return v;
    }
  }

  // Reads performed while locating an lvalue (index expressions, calls), excluding the key itself.
  Value lvalue_side_reads(const Expr &e) {
    switch (e.kind) {
    case ExprKind::Identifier:
      return {};
    case ExprKind::Member:
    case ExprKind::Cast:
      return e.operands.empty() ? Value{} : lvalue_side_reads(e.operand(0));
    case ExprKind::Unary:
      if (e.op == "*" || e.op == "&")
        return lvalue_side_reads(e.operand(0));
      return analyze_inner(e);
    case ExprKind::Index: {
      Value v = lvalue_side_reads(e.operand(0));
      Value idx = analyze_inner(e.operand(1));
      append_unique(v.reads, idx.reads);
      return v;
    }
    case ExprKind::Binary:
      if (e.op == "+" || e.op == "-") {
        Value v = lvalue_side_reads(e.operand(0));
        append_unique(v.reads, analyze_inner(e.operand(1)).reads);
        return v;
      }
      return analyze_inner(e);
    default:
      return analyze_inner(e);
    }
  }

  LValue lvalue(const Expr &e) {
    LValue out;
    switch (e.kind) {
    case ExprKind::Identifier:
      if (is_variable(e.op)) {
        out.key = e.op;
        out.strong = true;
      }
      return out;
    case ExprKind::Cast:
      return e.operands.empty() ? out : lvalue(e.operand(0));
    case ExprKind::Member: {
      LValue base = lvalue(e.operand(0));
      if (base.key.empty())
        return out;
      out = base;
      out.key = base.key + "." + e.op;
      if (e.arrow && !out.through_pointer) {
        out.through_pointer = true;
        out.pointer_base = key_root(base.key);
      }
      return out;
    }
    case ExprKind::Index:
    case ExprKind::Binary: {
      if (e.kind == ExprKind::Binary && e.op != "+" && e.op != "-")
        return out;
      LValue base = lvalue(e.operand(0));
      if (base.key.empty() && e.kind == ExprKind::Binary)
        base = lvalue(e.operand(1));
      if (base.key.empty())
        return out;
      out = base;
      out.strong = false;
      out.indexed = e.kind == ExprKind::Index;
      if (!out.through_pointer && is_pointer_var(base.key)) {
        out.through_pointer = true;
        out.pointer_base = base.key;
      }
      return out;
    }
    case ExprKind::Unary:
      if (e.op == "*") {
        LValue base = lvalue(e.operand(0));
        if (base.key.empty())
          return out;
        out = base;
        out.strong = false;
        if (!out.through_pointer) {
          out.through_pointer = true;
          out.pointer_base = key_root(base.key);
        }
        return out;
      }
      if (e.op == "++" || e.op == "--") {
        out = lvalue(e.operand(0));
        out.strong = false;
      }
      return out;
    case ExprKind::Postfix:
      out = lvalue(e.operand(0));
      out.strong = false;
      return out;
    default:
      return out;
    }
  }

  static DefFact fact_for(const LValue &lv, DefOrigin origin) {
    DefFact f;
    f.key = lv.key;
    f.origin = origin;
    f.strong = lv.strong;
    f.definite = lv.definite;
    f.through_pointer = lv.through_pointer;
    f.pointer_base = lv.pointer_base;
    f.indexed = lv.indexed;
    return f;
  }

  Value inc_dec(const Expr &e) {
    LValue lv = lvalue(e.operand(0));
    if (lv.key.empty())
      return analyze_inner(e.operand(0));
    Value v = lvalue_side_reads(e.operand(0));
    push_unique(v.reads, lv.key);
    push_unique(v.value_reads, lv.key);
    DefFact f = fact_for(lv, DefOrigin::IncDec);
    f.value_reads = {lv.key};
    node_.facts.push_back(std::move(f));
    return v;
  }

  Value assign(const Expr &e) {
    const Expr &lhs = e.operand(0);
    const Expr &rhs = e.operand(1);
    LValue lv = lvalue(lhs);
    Value side = lvalue_side_reads(lhs);
    Value r = analyze_inner(rhs);
    Value v;
    v.reads = side.reads;
    append_unique(v.reads, r.reads);
    bool compound = e.op != "=";
    if (compound && !lv.key.empty())
      push_unique(v.reads, lv.key);
    if (!lv.key.empty()) {
      DefFact f = fact_for(lv, compound ? DefOrigin::Compound : DefOrigin::Assign);
      f.value_reads = r.value_reads;
      if (compound)
        push_unique(f.value_reads, lv.key);
      f.value_calls = r.value_calls;
      f.zero_store = !compound && is_zero_literal(rhs);
      node_.facts.push_back(std::move(f));
    }
    v.value_reads = r.value_reads;
    v.value_calls = r.value_calls;
    return v;
  }

  ArgInfo argument(const Expr &arg, int index) {
    ArgInfo a;
    a.index = index;
    a.expr = &arg;
    Value v = analyze_inner(arg);
    a.reads = v.reads;
    a.value_reads = v.value_reads;
    a.value_calls = v.value_calls;
    const Expr &s = strip_casts(arg);
    a.string_literal = s.kind == ExprKind::StringLiteral;
    if (s.kind == ExprKind::Unary && s.op == "&") {
      LValue lv = lvalue(s.operand(0));
      if (!lv.key.empty()) {
        a.key = lv.key;
        a.address_of = true;
        a.strong_target = lv.strong;
        a.pointer_like = true;
        a.through_pointer = lv.through_pointer;
        a.pointer_base = lv.pointer_base;
      }
      return a;
    }
    if (s.kind == ExprKind::Identifier || s.kind == ExprKind::Member ||
        (s.kind == ExprKind::Binary && (s.op == "+" || s.op == "-"))) {
      LValue lv = lvalue(s);
      if (!lv.key.empty() && is_pointer_like(lv.key)) {
        a.key = lv.key;
        a.pointer_like = true;
        a.through_pointer = lv.through_pointer;
        a.pointer_base = lv.pointer_base;
        if (!a.through_pointer && is_pointer_var(key_root(lv.key))) {
          a.through_pointer = true;
          a.pointer_base = key_root(lv.key);
        }
      }
    }
    return a;
  }

  Value call(const Expr &e) {
    int index = static_cast<int>(node_.calls.size());
    node_.calls.emplace_back();
    CallInfo info;
    info.expr = &e;
    Value v;
    const Expr &callee = e.operand(0);
    if (callee.kind == ExprKind::Identifier && !is_local(callee.op) &&
        (!graph_.globals.count(callee.op) || graph_.declared_functions.count(callee.op))) {
      info.callee = callee.op;
    } else {
      info.indirect = true;
      Value c = analyze_inner(strip_casts(callee));
      info.callee_reads = c.reads;
      append_unique(v.reads, c.reads);
    }
    for (std::size_t i = 1; i < e.operands.size(); ++i) {
      ArgInfo a = argument(e.operand(i), static_cast<int>(i - 1));
      append_unique(v.reads, a.reads);
      if (a.address_of) {
        // Without callee knowledge &x is a maybe-definition; summaries refine it later.
        DefFact f;
        f.key = a.key;
        f.origin = DefOrigin::CallOut;
        f.through_pointer = a.through_pointer;
        f.pointer_base = a.pointer_base;
        f.call = index;
        f.arg = a.index;
        node_.facts.push_back(std::move(f));
      }
      info.args.push_back(std::move(a));
    }
    if (!info.indirect && is_terminal_call(info.callee))
      node_.terminal = true;
    node_.calls[static_cast<std::size_t>(index)] = std::move(info);
    v.value_calls = {index};
    return v;
  }

  CpgNode &node_;
  const FunctionInfo &fn_;
  const CodePropertyGraph &graph_;
  const std::set<std::string> &constants_;
};

} // namespace

class CpgBuilder {
public:
  explicit CpgBuilder(CodePropertyGraph &g) : g_(g) {}

  void build() {
    collect_globals();
    for (std::size_t u = 0; u < g_.units.size(); ++u) {
      for (const auto &fn : g_.units[u]->functions) {
        if (g_.function_index.count(fn.name)) {
          g_.diagnostics.push_back({"DuplicateDefinition", "function '" + fn.name + "' defined again in " +
                                                              g_.units[u]->path.generic_string() + "; first definition kept"});
          continue;
        }
        build_function(u, fn);
      }
    }
    collect_address_taken();
    g_.rebuild_adjacency();
    g_.recompute_dataflow();
  }

private:
  struct SwitchCtx {
    std::vector<std::pair<std::string, NodeId>> targets;
  };
  struct Ctx {
    NodeId brk = kNoNode;
    NodeId cont = kNoNode;
    SwitchCtx *sw = nullptr;
  };

  void collect_globals() {
    for (const auto &unit : g_.units) {
      for (const auto &fn : unit->functions)
        g_.declared_functions.insert(fn.name);
      for (const auto &gd : unit->globals) {
        if (gd.is_typedef)
          continue;
        if (gd.type == "enum constant") {
          constants_.insert(gd.name);
          continue;
        }
        if (gd.is_prototype) {
          g_.declared_functions.insert(gd.name);
          continue;
        }
        Symbol s;
        s.type = gd.type;
        s.pointer = gd.type.find('*') != std::string::npos || gd.type.find('[') != std::string::npos;
        s.array = gd.type.find('[') != std::string::npos;
        s.integer = !s.pointer && integer_type(gd.type);
        g_.globals[gd.name] = s;
      }
    }
  }

  void collect_address_taken() {
    for (const auto &n : g_.nodes)
      for (const auto &f : n.function_refs)
        if (g_.function_index.count(f))
          g_.address_taken.insert(f);
    for (const auto &unit : g_.units)
      for (const auto &gd : unit->globals)
        if (gd.init)
          visit_expr(*gd.init, [&](const Expr &e) {
            if (e.kind == ExprKind::Identifier && g_.function_index.count(e.op))
              g_.address_taken.insert(e.op);
          });
  }

  NodeId new_node(NodeKind kind, const FunctionInfo &fn, SourceSpan span, const Stmt *stmt, const Expr *expr) {
    CpgNode n;
    n.id = static_cast<NodeId>(g_.nodes.size());
    n.kind = kind;
    n.function = fn.name;
    n.span = std::move(span);
    n.stmt = stmt;
    n.expr = expr;
    g_.nodes.push_back(std::move(n));
    g_.function_of_node_.push_back(static_cast<int>(g_.functions.size()) - 1);
    return g_.nodes.back().id;
  }

  void add_symbols(FunctionInfo &info, const Stmt &s) {
    visit_stmt(s, [&](const Stmt &x) {
      for (const auto &d : x.decls) {
        if (d.function)
          continue;
        Symbol sym;
        sym.type = d.type;
        sym.pointer = d.pointer;
        sym.array = d.array;
        sym.integer = !d.pointer && integer_type(d.type);
        info.symbols.emplace(d.name, sym);
      }
    });
  }

  void build_function(std::size_t unit, const FunctionAst &fn) {
    FunctionInfo info;
    info.name = fn.name;
    info.unit = unit;
    info.ast = &fn;
    for (const auto &p : fn.parameters) {
      if (p.name.empty())
        continue;
      Symbol sym;
      sym.type = p.type;
      sym.pointer = p.pointer;
      sym.is_param = true;
      sym.integer = !p.pointer && integer_type(p.type);
      info.symbols[p.name] = sym;
    }
    add_symbols(info, *fn.body);
    g_.functions.push_back(std::move(info));
    FunctionInfo &f = g_.functions.back();

    f.entry = new_node(NodeKind::Entry, f, fn.span, nullptr, nullptr);
    for (std::size_t i = 0; i < fn.parameters.size(); ++i) {
      const Parameter &p = fn.parameters[i];
      NodeId id = new_node(NodeKind::Parameter, f, p.span, nullptr, nullptr);
      CpgNode &n = g_.nodes[static_cast<std::size_t>(id)];
      n.param_index = static_cast<int>(i);
      if (!p.name.empty()) {
        DefFact d;
        d.key = p.name;
        d.origin = DefOrigin::Param;
        d.strong = true;
        d.definite = true;
        n.facts.push_back(std::move(d));
      }
      f.params.push_back(id);
    }
    create_nodes(*fn.body, f);
    SourceSpan exit_span = fn.body_span;
    f.exit = new_node(NodeKind::Exit, f, exit_span, nullptr, nullptr);

    NodeId body = build(*fn.body, f.exit, Ctx{}, f);
    NodeId first = body;
    for (auto it = f.params.rbegin(); it != f.params.rend(); ++it) {
      cfg(*it, first);
      first = *it;
    }
    cfg(f.entry, first);
    for (NodeId p : f.params)
      ast(f.entry, p);

    g_.function_index[f.name] = f.entry;
    for (NodeId id = f.entry; id <= f.exit; ++id)
      f.nodes.push_back(id);
  }

  // Phase 1: nodes in source pre-order.
  void create_nodes(const Stmt &s, const FunctionInfo &f) {
    auto simple = [&](NodeKind kind) {
      NodeId id = new_node(kind, f, s.span, &s, s.expr.get());
      node_of_[&s] = id;
      CpgNode &n = g_.nodes[static_cast<std::size_t>(id)];
      NodeAnalyzer a(n, f, g_, constants_);
      if (kind == NodeKind::Opaque) {
        for_each_own_expr(s, [&](const Expr &e) { collect_reads_only(n, e, f); });
        return;
      }
      if (s.kind == StmtKind::Declaration)
        for (const auto &d : s.decls)
          a.declaration(d);
      else if (s.kind == StmtKind::Return)
        a.returned(s.expr.get());
      else if (s.expr)
        a.analyze(*s.expr);
      if (n.kind == NodeKind::Statement && !n.calls.empty())
        n.kind = NodeKind::CallSite;
    };
    auto condition = [&](const Expr &e, std::map<const Stmt *, NodeId> &where) {
      NodeId id = new_node(NodeKind::Condition, f, e.span, &s, &e);
      where[&s] = id;
      NodeAnalyzer a(g_.nodes[static_cast<std::size_t>(id)], f, g_, constants_);
      a.analyze(e);
    };
    switch (s.kind) {
    case StmtKind::Compound:
    case StmtKind::Case:
    case StmtKind::Default:
    case StmtKind::Labeled:
      for (const auto &c : s.children)
        if (c)
          create_nodes(*c, f);
      return;
    case StmtKind::Empty:
      return;
    case StmtKind::Declaration:
      if (s.decls.empty())
        return;
      simple(NodeKind::Statement);
      return;
    case StmtKind::Expression:
    case StmtKind::Break:
    case StmtKind::Continue:
      simple(NodeKind::Statement);
      return;
    case StmtKind::Return:
      simple(NodeKind::ReturnStmt);
      return;
    case StmtKind::Opaque:
      simple(NodeKind::Opaque);
      return;
    case StmtKind::If:
    case StmtKind::While:
    case StmtKind::Switch:
      condition(*s.expr, node_of_);
      for (const auto &c : s.children)
        if (c)
          create_nodes(*c, f);
      return;
    case StmtKind::DoWhile:
      create_nodes(*s.children[0], f);
      condition(*s.expr, node_of_);
      return;
    case StmtKind::For:
      if (s.init)
        create_nodes(*s.init, f);
      if (s.expr)
        condition(*s.expr, node_of_);
      if (s.step) {
        NodeId id = new_node(NodeKind::Statement, f, s.step->span, &s, s.step.get());
        step_of_[&s] = id;
        CpgNode &n = g_.nodes[static_cast<std::size_t>(id)];
        NodeAnalyzer a(n, f, g_, constants_);
        a.analyze(*s.step);
        if (!n.calls.empty())
          n.kind = NodeKind::CallSite;
      }
      create_nodes(*s.children[0], f);
      return;
    }
  }

  void collect_reads_only(CpgNode &n, const Expr &e, const FunctionInfo &f) {
    visit_expr(e, [&](const Expr &x) {
      if (x.kind == ExprKind::Identifier && f.symbols.count(x.op))
        push_unique(n.uses, x.op);
    });
  }

  void cfg(NodeId src, NodeId dst, std::string label = {}) {
    CpgEdge e;
    e.kind = EdgeKind::CfgNext;
    e.src = src;
    e.dst = dst;
    e.label = std::move(label);
    g_.edges.push_back(std::move(e));
  }

  void ast(NodeId parent, NodeId child) {
    CpgEdge e;
    e.kind = EdgeKind::AstChild;
    e.src = parent;
    e.dst = child;
    g_.edges.push_back(std::move(e));
  }

  // AstChild edges from a structural node to the nodes directly nested in it.
  void nest(NodeId parent, const Stmt &s) {
    visit_direct_nodes(s, [&](NodeId child) {
      if (child != parent)
        ast(parent, child);
    });
  }

  template <typename Fn> void visit_direct_nodes(const Stmt &s, Fn &&fn) {
    if (auto it = node_of_.find(&s); it != node_of_.end()) {
      fn(it->second);
      return;
    }
    if (s.init)
      visit_direct_nodes(*s.init, fn);
    for (const auto &c : s.children)
      if (c)
        visit_direct_nodes(*c, fn);
  }

  void patch(NodeId placeholder, NodeId real) {
    for (auto &e : g_.edges)
      if (e.kind == EdgeKind::CfgNext && e.dst == placeholder)
        e.dst = real;
  }

  // Phase 2: control-flow edges. Returns the entry node of `s`, or `succ` if `s` has none.
  NodeId build(const Stmt &s, NodeId succ, Ctx ctx, FunctionInfo &f) {
    switch (s.kind) {
    case StmtKind::Compound: {
      NodeId cur = succ;
      for (auto it = s.children.rbegin(); it != s.children.rend(); ++it)
        if (*it)
          cur = build(**it, cur, ctx, f);
      if (&s == f.ast->body.get())
        for (const auto &c : s.children)
          if (c)
            visit_direct_nodes(*c, [&](NodeId id) { ast(f.entry, id); });
      return cur;
    }
    case StmtKind::Empty:
      return succ;
    case StmtKind::Case:
    case StmtKind::Default: {
      NodeId entry = s.children.empty() || !s.children[0] ? succ : build(*s.children[0], succ, ctx, f);
      if (ctx.sw)
        ctx.sw->targets.emplace_back(s.kind == StmtKind::Case ? "case" : "default", entry);
      return entry;
    }
    case StmtKind::Labeled:
      return s.children.empty() || !s.children[0] ? succ : build(*s.children[0], succ, ctx, f);
    case StmtKind::Declaration:
      if (s.decls.empty())
        return succ;
      [[fallthrough]];
    case StmtKind::Expression:
    case StmtKind::Opaque: {
      NodeId n = node_of_.at(&s);
      cfg(n, g_.nodes[static_cast<std::size_t>(n)].terminal ? f.exit : succ);
      return n;
    }
    case StmtKind::Return: {
      NodeId n = node_of_.at(&s);
      cfg(n, f.exit);
      return n;
    }
    case StmtKind::Break: {
      NodeId n = node_of_.at(&s);
      cfg(n, ctx.brk == kNoNode ? succ : ctx.brk);
      return n;
    }
    case StmtKind::Continue: {
      NodeId n = node_of_.at(&s);
      cfg(n, ctx.cont == kNoNode ? succ : ctx.cont);
      return n;
    }
    case StmtKind::If: {
      NodeId c = node_of_.at(&s);
      NodeId then_entry = build(*s.children[0], succ, ctx, f);
      NodeId else_entry = s.children.size() > 1 && s.children[1] ? build(*s.children[1], succ, ctx, f) : succ;
      cfg(c, then_entry, "true");
      cfg(c, else_entry, "false");
      nest(c, *s.children[0]);
      if (s.children.size() > 1 && s.children[1])
        nest(c, *s.children[1]);
      return c;
    }
    case StmtKind::While: {
      NodeId c = node_of_.at(&s);
      NodeId body = build(*s.children[0], c, Ctx{succ, c, ctx.sw}, f);
      cfg(c, body, "true");
      cfg(c, succ, "false");
      nest(c, *s.children[0]);
      return c;
    }
    case StmtKind::DoWhile: {
      NodeId c = node_of_.at(&s);
      NodeId body = build(*s.children[0], c, Ctx{succ, c, ctx.sw}, f);
      cfg(c, body, "true");
      cfg(c, succ, "false");
      nest(c, *s.children[0]);
      return body;
    }
    case StmtKind::For: {
      auto cond_it = node_of_.find(&s);
      NodeId c = cond_it == node_of_.end() ? kNoNode : cond_it->second;
      auto step_it = step_of_.find(&s);
      NodeId step = step_it == step_of_.end() ? kNoNode : step_it->second;
      NodeId placeholder = --next_placeholder_;
      NodeId head = c != kNoNode ? c : placeholder;
      NodeId after_body = step != kNoNode ? step : head;
      NodeId body = build(*s.children[0], after_body, Ctx{succ, after_body, ctx.sw}, f);
      if (step != kNoNode)
        cfg(step, head);
      if (c != kNoNode) {
        cfg(c, body, "true");
        cfg(c, succ, "false");
        nest(c, *s.children[0]);
      } else {
        NodeId real = body != placeholder ? body : (step != kNoNode ? step : succ);
        patch(placeholder, real);
        head = real;
      }
      return s.init ? build(*s.init, head, ctx, f) : head;
    }
    case StmtKind::Switch: {
      NodeId c = node_of_.at(&s);
      SwitchCtx sw;
      build(*s.children[0], succ, Ctx{succ, ctx.cont, &sw}, f);
      bool has_default = false;
      for (const auto &[label, target] : sw.targets) {
        cfg(c, target, label);
        has_default = has_default || label == "default";
      }
      if (!has_default)
        cfg(c, succ, "default");
      nest(c, *s.children[0]);
      return c;
    }
    }
    return succ;
  }

  CodePropertyGraph &g_;
  std::set<std::string> constants_;
  std::map<const Stmt *, NodeId> node_of_;
  std::map<const Stmt *, NodeId> step_of_;
  NodeId next_placeholder_ = -1000;
};

const FunctionInfo *CodePropertyGraph::function(std::string_view name) const {
  auto it = function_index.find(std::string(name));
  if (it == function_index.end())
    return nullptr;
  return &function_of(it->second);
}

const FunctionInfo &CodePropertyGraph::function_of(NodeId id) const {
  return functions.at(static_cast<std::size_t>(function_of_node_.at(static_cast<std::size_t>(id))));
}

const TranslationUnit &CodePropertyGraph::unit_of(NodeId id) const { return *units.at(function_of(id).unit); }

void CodePropertyGraph::add_edge(CpgEdge e) {
  int index = static_cast<int>(edges.size());
  out_.at(static_cast<std::size_t>(e.src)).push_back(index);
  in_.at(static_cast<std::size_t>(e.dst)).push_back(index);
  edges.push_back(std::move(e));
}

void CodePropertyGraph::rebuild_adjacency() {
  out_.assign(nodes.size(), {});
  in_.assign(nodes.size(), {});
  for (std::size_t i = 0; i < edges.size(); ++i) {
    out_[static_cast<std::size_t>(edges[i].src)].push_back(static_cast<int>(i));
    in_[static_cast<std::size_t>(edges[i].dst)].push_back(static_cast<int>(i));
  }
}

std::vector<NodeId> CodePropertyGraph::successors(NodeId id) const {
  std::vector<NodeId> out;
  for (int e : out_edges(id))
    if (edges[static_cast<std::size_t>(e)].kind == EdgeKind::CfgNext)
      out.push_back(edges[static_cast<std::size_t>(e)].dst);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<NodeId> CodePropertyGraph::predecessors(NodeId id) const {
  std::vector<NodeId> out;
  for (int e : in_edges(id))
    if (edges[static_cast<std::size_t>(e)].kind == EdgeKind::CfgNext)
      out.push_back(edges[static_cast<std::size_t>(e)].src);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<DefSite> CodePropertyGraph::reaching(NodeId id, std::string_view key) const {
  std::vector<DefSite> out;
  for (const auto &d : reaching_all(id))
    if (keys_overlap(fact(d).key, key))
      out.push_back(d);
  return out;
}

void CodePropertyGraph::recompute_dataflow() {
  edges.erase(std::remove_if(edges.begin(), edges.end(), [](const CpgEdge &e) { return e.kind == EdgeKind::DfgReaches; }),
              edges.end());
  rd_in_.assign(nodes.size(), {});
  std::vector<std::vector<DefSite>> out(nodes.size());
  rebuild_adjacency();

  for (const auto &fn : functions) {
    // Forward may-analysis; node ids follow source order, so one ascending sweep per round converges quickly.
    bool changed = true;
    while (changed) {
      changed = false;
      for (NodeId id : fn.nodes) {
        std::vector<DefSite> in;
        for (NodeId p : predecessors(id))
          in.insert(in.end(), out[static_cast<std::size_t>(p)].begin(), out[static_cast<std::size_t>(p)].end());
        std::sort(in.begin(), in.end());
        in.erase(std::unique(in.begin(), in.end()), in.end());
        const CpgNode &n = node(id);
        std::vector<DefSite> result;
        for (const auto &d : in) {
          const std::string &k = fact(d).key;
          bool killed = std::any_of(n.facts.begin(), n.facts.end(), [&](const DefFact &f) {
            return f.strong && f.key != kReturnKey &&
                   (k == f.key || (k.size() > f.key.size() && k.compare(0, f.key.size(), f.key) == 0 && k[f.key.size()] == '.'));
          });
          if (!killed)
            result.push_back(d);
        }
        for (int i = 0; i < static_cast<int>(n.facts.size()); ++i)
          if (n.facts[static_cast<std::size_t>(i)].key != kReturnKey)
            result.push_back({id, i});
        std::sort(result.begin(), result.end());
        result.erase(std::unique(result.begin(), result.end()), result.end());
        if (in != rd_in_[static_cast<std::size_t>(id)] || result != out[static_cast<std::size_t>(id)]) {
          rd_in_[static_cast<std::size_t>(id)] = std::move(in);
          out[static_cast<std::size_t>(id)] = std::move(result);
          changed = true;
        }
      }
    }
  }

  std::set<std::tuple<NodeId, NodeId, std::string>> seen;
  for (const auto &n : nodes) {
    for (const auto &use : n.uses)
      for (const auto &d : reaching(n.id, use)) {
        const std::string &k = fact(d).key;
        if (seen.emplace(d.node, n.id, k).second) {
          CpgEdge e;
          e.kind = EdgeKind::DfgReaches;
          e.src = d.node;
          e.dst = n.id;
          e.var = k;
          edges.push_back(std::move(e));
        }
      }
  }
  rebuild_adjacency();
}

std::string CodePropertyGraph::dump() const {
  std::ostringstream out;
  for (const auto &n : nodes)
    out << "node " << n.id << " " << to_string(n.kind) << " " << n.span.file << ":" << n.span.start_line << "\n";
  std::vector<const CpgEdge *> sorted;
  for (const auto &e : edges)
    sorted.push_back(&e);
  std::stable_sort(sorted.begin(), sorted.end(), [](const CpgEdge *a, const CpgEdge *b) {
    return std::tie(a->kind, a->src, a->dst, a->var) < std::tie(b->kind, b->src, b->dst, b->var);
  });
  for (const CpgEdge *e : sorted) {
    out << "edge " << to_string(e->kind) << " " << e->src << " " << e->dst;
    if (e->kind == EdgeKind::DfgReaches)
      out << " " << e->var;
    else if (e->kind == EdgeKind::ArgToParam)
      out << " " << e->index;
    out << "\n";
  }
  return out.str();
}

CodePropertyGraph build_cpg(std::vector<std::shared_ptr<const TranslationUnit>> units) {
  CodePropertyGraph g;
  g.units = std::move(units);
  CpgBuilder(g).build();
  // Direct calls into the corpus.
  for (const auto &n : g.nodes) {
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      const CallInfo &call = n.calls[c];
      if (call.indirect)
        continue;
      const FunctionInfo *callee = g.function(call.callee);
      if (!callee)
        continue;
      CpgEdge e;
      e.kind = EdgeKind::CallsTo;
      e.src = n.id;
      e.dst = callee->entry;
      e.index = static_cast<int>(c);
      g.edges.push_back(e);
      for (const auto &a : call.args) {
        if (a.index >= static_cast<int>(callee->params.size()))
          continue;
        CpgEdge p;
        p.kind = EdgeKind::ArgToParam;
        p.src = n.id;
        p.dst = callee->params[static_cast<std::size_t>(a.index)];
        p.index = a.index;
        g.edges.push_back(p);
      }
    }
  }
  g.rebuild_adjacency();
  return g;
}

CodePropertyGraph build_cpg(std::vector<TranslationUnit> units) {
  std::vector<std::shared_ptr<const TranslationUnit>> shared;
  for (auto &u : units)
    shared.push_back(std::make_shared<const TranslationUnit>(std::move(u)));
  return build_cpg(std::move(shared));
}

namespace {

struct EdgeKey {
  NodeId src, dst;
  auto operator<=>(const EdgeKey &) const = default;
};

} // namespace

std::vector<std::vector<NodeId>> cfg_paths_between(const CodePropertyGraph &graph, NodeId from, NodeId to, std::size_t limit,
                                                   bool *truncated) {
  std::vector<std::vector<NodeId>> out;
  if (truncated)
    *truncated = false;
  if (from == to) {
    out.push_back({from});
    return out;
  }
  std::vector<NodeId> path{from};
  std::set<EdgeKey> used;
  bool stop = false;
  std::function<void(NodeId)> dfs = [&](NodeId at) {
    for (NodeId next : graph.successors(at)) {
      if (stop)
        return;
      EdgeKey e{at, next};
      if (used.count(e))
        continue;
      used.insert(e);
      path.push_back(next);
      if (next == to) {
        if (out.size() == limit) {
          stop = true;
          if (truncated)
            *truncated = true;
        } else {
          out.push_back(path);
        }
      } else {
        dfs(next);
      }
      path.pop_back();
      used.erase(e);
    }
  };
  dfs(from);
  return out;
}

std::vector<NodeId> cfg_shortest_path(const CodePropertyGraph &graph, NodeId from, NodeId to) {
  // BFS visiting successors in ascending order yields the lexicographically smallest shortest path.
  std::map<NodeId, NodeId> parent;
  std::deque<NodeId> queue{from};
  parent[from] = kNoNode;
  while (!queue.empty()) {
    NodeId at = queue.front();
    queue.pop_front();
    if (at == to)
      break;
    for (NodeId next : graph.successors(at))
      if (!parent.count(next)) {
        parent[next] = at;
        queue.push_back(next);
      }
  }
  if (!parent.count(to))
    return {};
  std::vector<NodeId> path;
  for (NodeId at = to; at != kNoNode; at = parent[at])
    path.push_back(at);
  std::reverse(path.begin(), path.end());
  return path;
}

bool cfg_reachable(const CodePropertyGraph &graph, NodeId from, NodeId to, NodeId avoid) {
  std::set<NodeId> seen{from};
  std::deque<NodeId> queue{from};
  while (!queue.empty()) {
    NodeId at = queue.front();
    queue.pop_front();
    if (at == to)
      return true;
    for (NodeId next : graph.successors(at))
      if (next != avoid && seen.insert(next).second)
        queue.push_back(next);
  }
  return false;
}

} // namespace bugforge
