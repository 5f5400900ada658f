#include "bugforge/taint.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace bugforge {

const char *to_string(TraceCase c) {
  switch (c) {
  case TraceCase::Sink: return "Sink";
  case TraceCase::IncDec: return "IncrementDecrement";
  case TraceCase::Arithmetic: return "ArithmeticRightHandSide";
  case TraceCase::ReturnValue: return "ReturnValue";
  case TraceCase::ArgumentOut: return "ArgumentOut";
  case TraceCase::Parameter: return "Parameter";
  case TraceCase::Use: return "Use";
  case TraceCase::Source: return "Source";
  }
  return "?";
}

TaintContext::TaintContext(const CodePropertyGraph &g, const SummaryMap &s, const PointerTargets &t)
    : graph(&g), summaries(&s), targets(&t) {
  for (const auto &n : g.nodes) {
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      const CallInfo &call = n.calls[c];
      for (const FunctionInfo *fn : internal_targets(n.id, call))
        call_sites[fn->name].emplace_back(n.id, static_cast<int>(c));
    }
    if (n.kind == NodeKind::ReturnStmt)
      for (const auto &f : n.facts)
        if (f.origin == DefOrigin::Return) {
          returns[n.function].push_back(n.id);
          break;
        }
  }
}

std::vector<const FunctionInfo *> TaintContext::internal_targets(NodeId node, const CallInfo &call) const {
  std::vector<const FunctionInfo *> out;
  auto body = [&](const std::string &name) -> const FunctionInfo * {
    auto it = summaries->find(name);
    if (it != summaries->end() && it->second.external)
      return nullptr; // an external summary wins over a body
    return graph->function(name);
  };
  if (!call.indirect) {
    if (const FunctionInfo *fn = body(call.callee))
      out.push_back(fn);
    return out;
  }
  if (auto it = targets->find(node); it != targets->end())
    for (const auto &name : it->second)
      if (const FunctionInfo *fn = body(name))
        out.push_back(fn);
  return out;
}

namespace {

bool is_format_passthrough_literal(const Expr *e) {
  if (!e)
    return false;
  while (e->kind == ExprKind::Cast && !e->operands.empty())
    e = e->operands[0].get();
  return e->kind == ExprKind::StringLiteral && e->op == "\"%s\"";
}

} // namespace

std::vector<SinkSite> find_sensitive_sinks(const CodePropertyGraph &graph, const SummaryMap &summaries) {
  std::vector<SinkSite> out;
  for (const auto &n : graph.nodes)
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      const CallInfo &call = n.calls[c];
      const FunctionSummary *s = callee_summary(summaries, call);
      if (!s)
        continue;
      for (const auto &spec : s->sinks) {
        if (spec.param >= static_cast<int>(call.args.size()))
          continue;
        const ArgInfo &a = call.args[static_cast<std::size_t>(spec.param)];
        if (spec.vuln_class == VulnClass::FormatString && a.string_literal)
          continue;
        out.push_back({n.id, static_cast<int>(c), call.callee, spec.param, spec.vuln_class, false});
      }
    }
  return out;
}

std::vector<SinkSite> find_format_passthroughs(const CodePropertyGraph &graph, const SummaryMap &summaries) {
  std::vector<SinkSite> out;
  for (const auto &n : graph.nodes)
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      const CallInfo &call = n.calls[c];
      const FunctionSummary *s = callee_summary(summaries, call);
      if (!s)
        continue;
      for (const auto &spec : s->sinks) {
        if (spec.vuln_class != VulnClass::FormatString)
          continue;
        std::size_t fmt = static_cast<std::size_t>(spec.param);
        if (call.args.size() != fmt + 2 || !is_format_passthrough_literal(call.args[fmt].expr))
          continue;
        out.push_back({n.id, static_cast<int>(c), call.callee, spec.param + 1, VulnClass::FormatString, true});
      }
    }
  return out;
}

std::vector<SourceSite> find_user_controlled_sources(const CodePropertyGraph &graph, const SummaryMap &summaries) {
  std::vector<SourceSite> out;
  for (const auto &n : graph.nodes) {
    if (n.kind == NodeKind::Parameter && n.function == "main" && (n.param_index == 1 || n.param_index == 2)) {
      const FunctionInfo *fn = graph.function("main");
      if (fn && fn->ast->parameters.at(static_cast<std::size_t>(n.param_index)).pointer)
        out.push_back({n.id, -1, "main", n.param_index == 1 ? SourceKind::Argv : SourceKind::Env, n.param_index});
      continue;
    }
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      const CallInfo &call = n.calls[c];
      const FunctionSummary *s = callee_summary(summaries, call);
      if (!s || !s->source_kind)
        continue;
      if (s->controls(kReturnValue))
        out.push_back({n.id, static_cast<int>(c), call.callee, *s->source_kind, kReturnValue});
      for (const auto &a : call.args)
        if (s->controls(a.index))
          out.push_back({n.id, static_cast<int>(c), call.callee, *s->source_kind, a.index});
    }
  }
  return out;
}

namespace {

using Kind = TreeVertex::Kind;

class Tracer {
public:
  Tracer(const TaintContext &ctx, const SinkSite &sink, const TraceConfig &cfg) : ctx_(ctx), g_(*ctx.graph), sink_(sink), cfg_(cfg) {}

  TraceResult run() {
    TreeVertex root;
    root.kind = Kind::Root;
    root.node = sink_.call_node;
    root.call = sink_.call_index;
    root.via = TraceCase::Sink;
    add(root, -1);
    while (!queue_.empty()) {
      int v = queue_.front();
      queue_.pop_front();
      expand(v);
    }
    enumerate_paths();
    return std::move(out_);
  }

private:
  struct VKey {
    Kind kind;
    NodeId node;
    std::string var;
    int fact, call;
    auto operator<=>(const VKey &) const = default;
  };

  static VKey key_of(const TreeVertex &v) {
    return {v.kind, v.node, v.kind == Kind::Use ? v.var : std::string(), v.fact, v.call};
  }

  DefinitionTree &tree() { return out_.tree; }
  const DefinitionTree &tree() const { return out_.tree; }

  void exhausted(const std::string &why) {
    if (!out_.budget_exhausted)
      out_.diagnostics.push_back({"BudgetExhausted", why});
    out_.budget_exhausted = true;
  }

  void add(TreeVertex v, int parent) {
    if (v.depth > cfg_.max_depth) {
      exhausted("interprocedural depth limit " + std::to_string(cfg_.max_depth) + " reached");
      return;
    }
    VKey key = key_of(v);
    if (cfg_.memoize) {
      if (auto it = memo_.find(key); it != memo_.end()) {
        link(it->second, parent);
        return;
      }
    } else {
      for (int a = parent; a >= 0;) {
        if (key_of(tree().vertices[static_cast<std::size_t>(a)]) == key)
          return;
        const auto &up = tree().toward_sink[static_cast<std::size_t>(a)];
        a = up.empty() ? -1 : up.front();
      }
    }
    if (tree().vertices.size() >= cfg_.max_vertices) {
      exhausted("definition tree size limit reached");
      return;
    }
    int id = static_cast<int>(tree().vertices.size());
    tree().vertices.push_back(std::move(v));
    tree().toward_sink.emplace_back();
    tree().sources_of.emplace_back();
    if (cfg_.memoize)
      memo_.emplace(std::move(key), id);
    link(id, parent);
    queue_.push_back(id);
  }

  void link(int child, int parent) {
    if (parent < 0)
      return;
    auto &up = tree().toward_sink[static_cast<std::size_t>(child)];
    if (std::find(up.begin(), up.end(), parent) != up.end())
      return;
    up.push_back(parent);
    tree().sources_of[static_cast<std::size_t>(parent)].push_back(child);
  }

  TreeVertex make(Kind kind, NodeId node, std::string var, TraceCase via, int depth) const {
    TreeVertex v;
    v.kind = kind;
    v.node = node;
    v.var = std::move(var);
    v.via = via;
    v.depth = depth;
    return v;
  }

  void use(NodeId node, const std::string &key, TraceCase via, int depth, int parent) {
    add(make(Kind::Use, node, key, via, depth), parent);
  }

  void call_result(NodeId node, int call, TraceCase via, int depth, int parent) {
    TreeVertex v = make(Kind::CallResult, node, kReturnKey, via, depth);
    v.call = call;
    add(std::move(v), parent);
  }

  void source(NodeId node, int call, int arg, const std::string &var, int depth, int parent) {
    TreeVertex v = make(Kind::Source, node, var, TraceCase::Source, depth);
    v.call = call;
    v.fact = arg;
    add(std::move(v), parent);
  }

  void arg_value(NodeId node, int call, int arg, TraceCase via, int depth, int parent) {
    const CallInfo &c = g_.node(node).calls.at(static_cast<std::size_t>(call));
    if (arg < 0 || arg >= static_cast<int>(c.args.size()))
      return;
    const ArgInfo &a = c.args[static_cast<std::size_t>(arg)];
    for (const auto &r : a.value_reads)
      use(node, r, via, depth, parent);
    for (int vc : a.value_calls)
      call_result(node, vc, via, depth, parent);
  }

  static TraceCase case_of(DefOrigin o) {
    switch (o) {
    case DefOrigin::IncDec: return TraceCase::IncDec;
    case DefOrigin::CallOut: return TraceCase::ArgumentOut;
    case DefOrigin::Param: return TraceCase::Parameter;
    default: return TraceCase::Arithmetic;
    }
  }

  void expand(int id) {
    const TreeVertex v = tree().vertices[static_cast<std::size_t>(id)];
    const CpgNode &n = g_.node(v.node);
    switch (v.kind) {
    case Kind::Root:
      arg_value(v.node, v.call, sink_.sensitive_arg_index, TraceCase::Use, 0, id);
      return;
    case Kind::Use: {
      std::vector<DefSite> defs = g_.reaching(v.node, v.var);
      if (defs.empty() && dangling_.insert({v.node, v.var}).second)
        out_.diagnostics.push_back({"DanglingDefinition", "'" + v.var + "' has no reaching definition at " +
                                                              n.span.file + ":" + std::to_string(n.span.start_line)});
      for (const auto &d : defs) {
        const DefFact &f = g_.fact(d);
        TreeVertex dv = make(Kind::Def, d.node, f.key, case_of(f.origin), v.depth);
        dv.fact = d.fact;
        add(std::move(dv), id);
      }
      return;
    }
    case Kind::Def:
      expand_def(id, v, n);
      return;
    case Kind::CallResult: {
      const CallInfo &call = n.calls.at(static_cast<std::size_t>(v.call));
      const FunctionSummary *s = callee_summary(*ctx_.summaries, call);
      if (s && s->source_kind && s->controls(kReturnValue)) {
        source(v.node, v.call, kReturnValue, v.var, v.depth, id);
        return;
      }
      auto targets = ctx_.internal_targets(v.node, call);
      if (!targets.empty()) {
        for (const FunctionInfo *fn : targets) {
          auto it = ctx_.returns.find(fn->name);
          if (it == ctx_.returns.end())
            continue;
          for (NodeId r : it->second)
            for (const auto &f : g_.node(r).facts)
              if (f.origin == DefOrigin::Return) {
                for (const auto &key : f.value_reads)
                  use(r, key, TraceCase::ReturnValue, v.depth + 1, id);
                for (int vc : f.value_calls)
                  call_result(r, vc, TraceCase::ReturnValue, v.depth + 1, id);
              }
        }
        return;
      }
      if (call.indirect)
        return; // no candidate bodies: nothing to follow
      for (int a : transfer_sources(call, s, kReturnValue))
        arg_value(v.node, v.call, a, TraceCase::ReturnValue, v.depth, id);
      return;
    }
    case Kind::Source:
      return;
    }
  }

  void expand_def(int id, const TreeVertex &v, const CpgNode &n) {
    const DefFact &f = n.facts.at(static_cast<std::size_t>(v.fact));
    switch (f.origin) {
    case DefOrigin::Param: {
      const FunctionInfo &fn = g_.function_of(v.node);
      if (fn.name == "main" && (n.param_index == 1 || n.param_index == 2) &&
          fn.ast->parameters.at(static_cast<std::size_t>(n.param_index)).pointer) {
        source(v.node, -1, n.param_index, f.key, v.depth, id);
        return;
      }
      auto it = ctx_.call_sites.find(fn.name);
      if (it == ctx_.call_sites.end())
        return;
      for (const auto &[site, call] : it->second)
        arg_value(site, call, n.param_index, TraceCase::Parameter, v.depth + 1, id);
      return;
    }
    case DefOrigin::IncDec:
      use(v.node, f.key, TraceCase::IncDec, v.depth, id);
      return;
    case DefOrigin::CallOut: {
      const CallInfo &call = n.calls.at(static_cast<std::size_t>(f.call));
      const FunctionSummary *s = callee_summary(*ctx_.summaries, call);
      if (s && s->source_kind && s->controls(f.arg)) {
        source(v.node, f.call, f.arg, f.key, v.depth, id);
        return;
      }
      auto targets = ctx_.internal_targets(v.node, call);
      if (!targets.empty()) {
        for (const FunctionInfo *fn : targets) {
          if (f.arg >= static_cast<int>(fn->ast->parameters.size()))
            continue;
          const std::string &pname = fn->ast->parameters[static_cast<std::size_t>(f.arg)].name;
          for (NodeId m : fn->nodes) {
            const CpgNode &mn = g_.node(m);
            for (std::size_t k = 0; k < mn.facts.size(); ++k) {
              const DefFact &w = mn.facts[k];
              if (!w.through_pointer || w.pointer_base != pname || w.origin == DefOrigin::Param)
                continue;
              TreeVertex dv = make(Kind::Def, m, w.key, case_of(w.origin), v.depth + 1);
              dv.fact = static_cast<int>(k);
              add(std::move(dv), id);
            }
          }
        }
        return;
      }
      if (call.indirect)
        return;
      for (int a : transfer_sources(call, s, f.arg))
        arg_value(v.node, f.call, a, TraceCase::ArgumentOut, v.depth, id);
      return;
    }
    case DefOrigin::Return:
      return;
    default:
      for (const auto &key : f.value_reads)
        use(v.node, key, TraceCase::Arithmetic, v.depth, id);
      for (int vc : f.value_calls)
        call_result(v.node, vc, TraceCase::Arithmetic, v.depth, id);
      return;
    }
  }

  SourceSite source_site(const TreeVertex &v) const {
    SourceSite s;
    s.call_node = v.node;
    s.call_index = v.call;
    s.controlled_arg = v.fact;
    if (v.call < 0) {
      s.callee = "main";
      s.source_kind = v.fact == 1 ? SourceKind::Argv : SourceKind::Env;
    } else {
      const CallInfo &call = g_.node(v.node).calls.at(static_cast<std::size_t>(v.call));
      s.callee = call.callee;
      s.source_kind = *callee_summary(*ctx_.summaries, call)->source_kind;
    }
    return s;
  }

  DataFlowPath to_path(const std::vector<int> &chain) const {
    DataFlowPath p;
    p.sink = sink_;
    p.source = source_site(tree().vertices[static_cast<std::size_t>(chain.front())]);
    std::vector<std::vector<const TreeVertex *>> runs;
    for (int id : chain) {
      const TreeVertex &v = tree().vertices[static_cast<std::size_t>(id)];
      if (runs.empty() || runs.back().front()->node != v.node)
        runs.emplace_back();
      runs.back().push_back(&v);
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const auto &run = runs[i];
      p.hops.push_back(run.front()->node);
      if (i + 1 < runs.size())
        p.hop_vars.push_back(run.back()->var);
      TraceCase c = run.front()->via;
      for (const TreeVertex *v : run)
        if (v->kind == Kind::Source || v->kind == Kind::Root) {
          c = v->via;
          break;
        } else if (v->kind == Kind::Def) {
          c = v->via;
        }
      p.hop_cases.push_back(c);
      const std::string &fn = g_.node(run.front()->node).function;
      if (p.crossed_functions.empty() || p.crossed_functions.back() != fn)
        p.crossed_functions.push_back(fn);
    }
    return p;
  }

  void enumerate_paths() {
    std::set<DataFlowPath> found;
    const auto &verts = tree().vertices;
    for (std::size_t s = 0; s < verts.size(); ++s) {
      if (verts[s].kind != Kind::Source)
        continue;
      std::vector<int> chain{static_cast<int>(s)};
      std::set<int> on_chain{static_cast<int>(s)};
      if (!walk(chain, on_chain, found))
        break;
    }
    out_.paths.assign(found.begin(), found.end());
  }

  // Depth-first walk toward the root; false once the path budget is spent.
  bool walk(std::vector<int> &chain, std::set<int> &on_chain, std::set<DataFlowPath> &found) {
    int at = chain.back();
    if (at == tree().root) {
      found.insert(to_path(chain));
      if (found.size() >= cfg_.max_paths) {
        exhausted("path limit " + std::to_string(cfg_.max_paths) + " reached");
        return false;
      }
      return true;
    }
    for (int next : tree().toward_sink[static_cast<std::size_t>(at)]) {
      if (on_chain.count(next))
        continue;
      chain.push_back(next);
      on_chain.insert(next);
      bool more = walk(chain, on_chain, found);
      on_chain.erase(next);
      chain.pop_back();
      if (!more)
        return false;
    }
    return true;
  }

  const TaintContext &ctx_;
  const CodePropertyGraph &g_;
  SinkSite sink_;
  TraceConfig cfg_;
  TraceResult out_;
  std::map<VKey, int> memo_;
  std::deque<int> queue_;
  std::set<std::pair<NodeId, std::string>> dangling_;
};

} // namespace

TraceResult trace_to_sources(const TaintContext &ctx, const SinkSite &sink, const TraceConfig &config) {
  return Tracer(ctx, sink, config).run();
}

std::vector<SourceSinkPair> group_pairs(const std::vector<DataFlowPath> &paths) {
  std::map<std::pair<SourceSite, SinkSite>, std::vector<DataFlowPath>> groups;
  for (const auto &p : paths)
    groups[{p.source, p.sink}].push_back(p);
  std::vector<SourceSinkPair> out;
  for (auto &[key, list] : groups) {
    std::sort(list.begin(), list.end());
    out.push_back({key.first, key.second, std::move(list)});
  }
  return out;
}

bool path_connected(const CodePropertyGraph &graph, const DataFlowPath &path) {
  if (path.hops.empty() || path.hop_vars.size() + 1 != path.hops.size())
    return false;
  if (path.hops.front() != path.source.call_node || path.hops.back() != path.sink.call_node)
    return false;
  for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
    NodeId a = path.hops[i], b = path.hops[i + 1];
    bool ok = false;
    for (int e : graph.out_edges(a)) {
      const CpgEdge &edge = graph.edges[static_cast<std::size_t>(e)];
      if (edge.dst == b && (edge.kind == EdgeKind::DfgReaches || edge.kind == EdgeKind::ArgToParam))
        ok = true;
    }
    if (!ok) {
      // return value or write-back: b calls the function holding a
      NodeId entry = graph.function_of(a).entry;
      for (int e : graph.out_edges(b)) {
        const CpgEdge &edge = graph.edges[static_cast<std::size_t>(e)];
        if (edge.kind == EdgeKind::CallsTo && edge.dst == entry)
          ok = true;
      }
    }
    if (!ok)
      return false;
  }
  return true;
}

TaintResult run_taint(const CodePropertyGraph &graph, const InterprocResult &ip, const TraceConfig &config) {
  TaintResult out;
  TaintContext ctx(graph, ip.summaries, ip.pointer_targets);
  out.sinks = find_sensitive_sinks(graph, ip.summaries);
  out.sources = find_user_controlled_sources(graph, ip.summaries);
  out.passthroughs = find_format_passthroughs(graph, ip.summaries);
  auto trace_all = [&](const std::vector<SinkSite> &sinks, std::vector<DataFlowPath> &paths) {
    for (const auto &sink : sinks) {
      TraceResult r = trace_to_sources(ctx, sink, config);
      if (r.budget_exhausted)
        out.truncated.push_back(sink);
      for (auto &d : r.diagnostics)
        out.diagnostics.push_back(std::move(d));
      for (auto &p : r.paths)
        paths.push_back(std::move(p));
    }
    std::sort(paths.begin(), paths.end());
  };
  trace_all(out.sinks, out.paths);
  trace_all(out.passthroughs, out.passthrough_paths);
  out.pairs = group_pairs(out.paths);
  return out;
}

} // namespace bugforge
