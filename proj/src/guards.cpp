#include "bugforge/guards.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>

namespace bugforge {

const char *to_string(GuardClass c) {
  switch (c) {
  case GuardClass::AbortingCheck: return "AbortingCheck";
  case GuardClass::NonAbortingCheck: return "NonAbortingCheck";
  case GuardClass::UnrecognizedMechanism: return "UnrecognizedMechanism";
  case GuardClass::Sanitization: return "Sanitization";
  }
  return "?";
}

const char *to_string(AbortEvidence e) {
  switch (e) {
  case AbortEvidence::ReturnStmt: return "ReturnStmt";
  case AbortEvidence::ExitCall: return "ExitCall";
  case AbortEvidence::ErrorValueSet: return "ErrorValueSet";
  case AbortEvidence::SignalRaise: return "SignalRaise";
  }
  return "?";
}

const char *to_string(Polarity p) {
  switch (p) {
  case Polarity::MustBeFalseToPass: return "MustBeFalseToPass";
  case Polarity::MustBeTrueToPass: return "MustBeTrueToPass";
  case Polarity::Unknown: return "Unknown";
  }
  return "?";
}

std::set<NodeId> ControlFlowCorridor::nodes() const {
  std::set<NodeId> out;
  for (const auto &s : segments)
    for (const auto &seq : s.sequences)
      out.insert(seq.begin(), seq.end());
  return out;
}

std::vector<NodeId> ControlFlowCorridor::shortest(const CodePropertyGraph &graph) const {
  std::vector<NodeId> out;
  for (const auto &s : segments) {
    std::vector<NodeId> seq = s.from == s.to ? std::vector<NodeId>{s.from} : cfg_shortest_path(graph, s.from, s.to);
    out.insert(out.end(), seq.begin(), seq.end());
  }
  return out;
}

std::vector<NodeId> corridor_statements(const CodePropertyGraph &graph, const ControlFlowCorridor &corridor,
                                        const DataFlowPath &path) {
  std::vector<NodeId> out;
  for (NodeId id : corridor.shortest(graph)) {
    NodeKind k = graph.node(id).kind;
    if (k == NodeKind::Entry || k == NodeKind::Exit || k == NodeKind::Parameter || id == path.sink.call_node)
      continue;
    if (std::find(out.begin(), out.end(), id) == out.end())
      out.push_back(id);
  }
  return out;
}

namespace {

bool calls_function(const CodePropertyGraph &g, NodeId site, const FunctionInfo &fn) {
  for (int e : g.out_edges(site)) {
    const CpgEdge &edge = g.edges[static_cast<std::size_t>(e)];
    if (edge.kind == EdgeKind::CallsTo && edge.dst == fn.entry)
      return true;
  }
  return false;
}

bool overlaps_any(const std::string &key, const std::set<std::string> &vars) {
  return std::any_of(vars.begin(), vars.end(), [&](const std::string &v) { return keys_overlap(key, v); });
}

// Forward pass over one sequence: variables carrying data derived from `var`.
// `visit` sees each node with the derived set as it stands before the node.
template <typename Visit>
void derive_along(const CodePropertyGraph &g, const std::vector<NodeId> &seq, const std::string &var, Visit visit) {
  std::set<std::string> derived{var};
  for (NodeId id : seq) {
    const CpgNode &n = g.node(id);
    visit(n, derived);
    for (const auto &f : n.facts) {
      if (f.origin == DefOrigin::Return || f.origin == DefOrigin::Param)
        continue;
      bool from_derived = std::any_of(f.value_reads.begin(), f.value_reads.end(),
                                      [&](const std::string &r) { return overlaps_any(r, derived); });
      if (from_derived)
        derived.insert(f.key);
    }
  }
}

std::vector<NodeId> downstream(const ControlFlowCorridor &c, std::size_t k, NodeId cond) {
  std::set<NodeId> out;
  for (std::size_t j = k; j < c.segments.size() && c.segments[j].function == c.segments[k].function; ++j)
    out.insert(c.segments[j].to);
  out.erase(cond);
  return {out.begin(), out.end()};
}

} // namespace

ControlFlowCorridor enumerate_corridor(const CodePropertyGraph &graph, const DataFlowPath &path, std::size_t limit) {
  ControlFlowCorridor c;
  auto add = [&](int hop, const FunctionInfo &fn, const std::string &var, NodeId from, NodeId to) {
    CorridorSegment s;
    s.hop = hop;
    s.function = fn.name;
    s.var = var;
    s.from = from;
    s.to = to;
    if (from == to)
      s.sequences = {{from}};
    else
      s.sequences = cfg_paths_between(graph, from, to, limit, &s.truncated);
    c.total_enumerated += s.sequences.size();
    c.truncated = c.truncated || s.truncated;
    c.segments.push_back(std::move(s));
  };
  for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) {
    NodeId a = path.hops[i], b = path.hops[i + 1];
    const FunctionInfo &fa = graph.function_of(a);
    const FunctionInfo &fb = graph.function_of(b);
    const std::string &var = path.hop_vars[i];
    const std::string &next_var = i + 1 < path.hop_vars.size() ? path.hop_vars[i + 1] : var;
    int hop = static_cast<int>(i);
    if (fa.name == fb.name) {
      add(hop, fa, var, a, b);
    } else if (calls_function(graph, b, fa)) {
      // leave the callee, resume at the call site
      add(hop, fa, var, a, fa.exit);
      add(hop, fb, next_var, b, b);
    } else if (calls_function(graph, a, fb)) {
      // enter the callee through its entry point
      add(hop, fa, var, a, a);
      add(hop, fb, next_var, fb.entry, b);
    } else {
      add(hop, fa, var, a, a);
      add(hop, fb, next_var, b, b);
    }
  }
  return c;
}

std::vector<GuardSite> find_security_mechanisms(const CodePropertyGraph &graph, const ControlFlowCorridor &corridor) {
  std::map<NodeId, GuardSite> found;
  for (std::size_t k = 0; k < corridor.segments.size(); ++k) {
    const CorridorSegment &s = corridor.segments[k];
    for (const auto &seq : s.sequences)
      derive_along(graph, seq, s.var, [&](const CpgNode &n, const std::set<std::string> &derived) {
        if (n.kind != NodeKind::Condition || n.id == s.from || n.id == s.to || found.count(n.id))
          return;
        std::string hit;
        for (const auto &u : n.uses)
          if (keys_overlap(u, s.var)) {
            hit = s.var;
            break;
          }
        if (hit.empty())
          for (const auto &u : n.uses)
            for (const auto &d : derived)
              if (hit.empty() && keys_overlap(u, d))
                hit = d;
        if (hit.empty())
          return;
        GuardSite g;
        g.condition_node = n.id;
        g.function = s.function;
        g.guarded_var = s.var;
        g.derived_var = hit;
        g.segment = static_cast<int>(k);
        g.segment_target = s.to;
        g.downstream = downstream(corridor, k, n.id);
        found.emplace(n.id, std::move(g));
      });
  }
  std::vector<GuardSite> out;
  for (auto &[id, g] : found)
    out.push_back(std::move(g));
  return out;
}

namespace {

bool error_like_name(const std::string &key) {
  std::string lower;
  for (char ch : key)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return lower.find("err") != std::string::npos || lower.find("fail") != std::string::npos ||
         lower.find("status") != std::string::npos;
}

bool negative_constant(const Expr *e) {
  while (e && e->kind == ExprKind::Cast && !e->operands.empty())
    e = e->operands[0].get();
  return e && e->kind == ExprKind::Unary && e->op == "-" && !e->operands.empty() &&
         e->operands[0]->kind == ExprKind::IntLiteral;
}

bool sets_error_value(const CpgNode &n) {
  for (const auto &f : n.facts)
    if ((f.origin == DefOrigin::Assign || f.origin == DefOrigin::Init) && error_like_name(f.key))
      return true;
  if (n.expr && n.expr->kind == ExprKind::Assign && n.expr->op == "=" && n.expr->operands.size() == 2 &&
      negative_constant(n.expr->operands[1].get()))
    return true;
  if (n.stmt && n.stmt->kind == StmtKind::Declaration)
    for (const auto &d : n.stmt->decls)
      if (negative_constant(d.init.get()))
        return true;
  return false;
}

struct Branch {
  NodeId start = kNoNode;
  bool continues = false;
  std::set<AbortEvidence> evidence;
};

Branch explore(const CodePropertyGraph &g, NodeId cond, NodeId start, const std::set<NodeId> &targets) {
  Branch b;
  b.start = start;
  b.continues = std::any_of(targets.begin(), targets.end(),
                            [&](NodeId t) { return start == t || cfg_reachable(g, start, t, cond); });
  if (b.continues)
    return b;
  bool error_set = false;
  std::set<NodeId> seen{start};
  std::deque<NodeId> queue{start};
  while (!queue.empty()) {
    NodeId id = queue.front();
    queue.pop_front();
    const CpgNode &n = g.node(id);
    if (n.kind == NodeKind::ReturnStmt)
      b.evidence.insert(AbortEvidence::ReturnStmt);
    for (const auto &c : n.calls) {
      if (c.indirect)
        continue;
      if (c.callee == "exit" || c.callee == "_exit" || c.callee == "_Exit")
        b.evidence.insert(AbortEvidence::ExitCall);
      if (c.callee == "abort" || c.callee == "raise" || c.callee == "longjmp")
        b.evidence.insert(AbortEvidence::SignalRaise);
    }
    error_set = error_set || sets_error_value(n);
    for (NodeId s : g.successors(id)) {
      if (g.node(s).kind == NodeKind::Exit && !n.terminal && n.kind != NodeKind::ReturnStmt)
        b.evidence.insert(AbortEvidence::ReturnStmt); // falls off the end of the function
      if (s == cond || targets.count(s) || !seen.insert(s).second)
        continue;
      queue.push_back(s);
    }
  }
  if (error_set && b.evidence.count(AbortEvidence::ReturnStmt))
    b.evidence.insert(AbortEvidence::ErrorValueSet);
  return b;
}

} // namespace

GuardSite classify_guard(const CodePropertyGraph &graph, GuardSite site) {
  NodeId cond = site.condition_node;
  NodeId on_true = kNoNode, on_false = kNoNode;
  for (int e : graph.out_edges(cond)) {
    const CpgEdge &edge = graph.edges[static_cast<std::size_t>(e)];
    if (edge.kind != EdgeKind::CfgNext)
      continue;
    if (edge.label == "true")
      on_true = edge.dst;
    else if (edge.label == "false")
      on_false = edge.dst;
  }
  site.abort_evidence.clear();
  site.polarity = Polarity::Unknown;
  site.gating = false;
  if (on_true == kNoNode || on_false == kNoNode) {
    site.classification = GuardClass::UnrecognizedMechanism;
    return site;
  }
  std::set<NodeId> targets(site.downstream.begin(), site.downstream.end());
  targets.insert(site.segment_target);
  Branch t = explore(graph, cond, on_true, targets);
  Branch f = explore(graph, cond, on_false, targets);
  if (t.continues && f.continues) {
    site.classification = GuardClass::NonAbortingCheck;
    return site;
  }
  if (t.continues == f.continues) {
    site.classification = GuardClass::UnrecognizedMechanism;
    return site;
  }
  const Branch &stop = t.continues ? f : t;
  if (stop.evidence.empty()) {
    site.classification = GuardClass::UnrecognizedMechanism;
    return site;
  }
  site.classification = GuardClass::AbortingCheck;
  site.abort_evidence = stop.evidence;
  site.polarity = t.continues ? Polarity::MustBeTrueToPass : Polarity::MustBeFalseToPass;
  const Stmt *s = graph.node(cond).stmt;
  if (t.continues && s && s->kind == StmtKind::If && !s->children.empty()) {
    const SourceSpan &then_span = s->children[0]->span;
    const SourceSpan &target = graph.node(site.segment_target).span;
    site.gating = target.byte_start >= then_span.byte_start && target.byte_end <= then_span.byte_end;
  }
  return site;
}

std::vector<GuardSite> detect_sanitizations(const CodePropertyGraph &graph, const ControlFlowCorridor &corridor) {
  std::map<NodeId, GuardSite> found;
  for (std::size_t k = 0; k < corridor.segments.size(); ++k) {
    const CorridorSegment &s = corridor.segments[k];
    for (const auto &seq : s.sequences)
      derive_along(graph, seq, s.var, [&](const CpgNode &n, const std::set<std::string> &derived) {
        if (n.id == s.from || n.id == s.to || found.count(n.id))
          return;
        for (const auto &f : n.facts) {
          if (!f.indexed || !f.zero_store)
            continue;
          std::string base = f.through_pointer ? f.pointer_base : key_root(f.key);
          if (!overlaps_any(base, derived))
            continue;
          GuardSite g;
          g.condition_node = n.id;
          g.function = s.function;
          g.guarded_var = s.var;
          g.derived_var = base;
          g.segment = static_cast<int>(k);
          g.segment_target = s.to;
          g.classification = GuardClass::Sanitization;
          found.emplace(n.id, std::move(g));
          return;
        }
      });
  }
  std::vector<GuardSite> out;
  for (auto &[id, g] : found)
    out.push_back(std::move(g));
  return out;
}

PathGuards analyze_guards(const CodePropertyGraph &graph, const DataFlowPath &path, std::size_t limit) {
  PathGuards out;
  out.corridor = enumerate_corridor(graph, path, limit);
  for (auto &site : find_security_mechanisms(graph, out.corridor))
    out.guards.push_back(classify_guard(graph, std::move(site)));
  out.sanitizations = detect_sanitizations(graph, out.corridor);
  return out;
}

} // namespace bugforge
