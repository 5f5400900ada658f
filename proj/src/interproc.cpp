#include "bugforge/interproc.hpp"

#include <algorithm>
#include <functional>
#include <queue>

namespace bugforge {

bool CallGraph::is_broken(const std::string &caller, const std::string &callee) const {
  return std::any_of(broken_edges.begin(), broken_edges.end(),
                     [&](const CallEdge &e) { return e.caller == caller && e.callee == callee; });
}

std::vector<std::string> CallGraph::callees(const std::string &caller) const {
  std::vector<std::string> out;
  for (const auto &e : edges)
    if (e.caller == caller)
      out.push_back(e.callee);
  return out;
}

PointerTargets resolve_function_pointers(const CodePropertyGraph &graph) {
  PointerTargets out;
  for (const auto &n : graph.nodes)
    for (const auto &c : n.calls)
      if (c.indirect)
        out[n.id] = graph.address_taken;
  return out;
}

CallGraph build_call_graph(const CodePropertyGraph &graph) {
  return build_call_graph(graph, resolve_function_pointers(graph));
}

CallGraph build_call_graph(const CodePropertyGraph &graph, const PointerTargets &targets) {
  CallGraph cg;
  std::map<std::pair<std::string, std::string>, std::set<NodeId>> sites;
  for (const auto &fn : graph.functions) {
    cg.nodes.insert(fn.name);
    int count = 0;
    for (NodeId id : fn.nodes) {
      const CpgNode &n = graph.node(id);
      for (const auto &c : n.calls) {
        ++count;
        if (!c.indirect) {
          sites[{fn.name, c.callee}].insert(id);
          continue;
        }
        if (auto it = targets.find(id); it != targets.end())
          for (const auto &t : it->second)
            sites[{fn.name, t}].insert(id);
      }
    }
    cg.call_count[fn.name] = count;
  }
  for (const auto &[key, where] : sites) {
    CallEdge e;
    e.caller = key.first;
    e.callee = key.second;
    e.sites.assign(where.begin(), where.end());
    e.external = graph.function(key.second) == nullptr;
    cg.nodes.insert(e.callee);
    cg.call_count.emplace(e.callee, 0);
    cg.edges.push_back(std::move(e));
  }
  break_cycles(cg);
  return cg;
}

namespace {

std::vector<std::vector<std::string>> strongly_connected(const CallGraph &cg) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto &e : cg.edges)
    if (!cg.is_broken(e.caller, e.callee))
      adj[e.caller].push_back(e.callee);
  for (auto &[k, v] : adj)
    std::sort(v.begin(), v.end());

  std::map<std::string, int> index, low;
  std::set<std::string> on_stack;
  std::vector<std::string> stack;
  std::vector<std::vector<std::string>> out;
  int counter = 0;
  std::function<void(const std::string &)> visit = [&](const std::string &v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto &w : adj[v]) {
      if (!index.count(w)) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack.count(w)) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::string> scc;
      std::string w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        scc.push_back(w);
      } while (w != v);
      std::sort(scc.begin(), scc.end());
      out.push_back(std::move(scc));
    }
  };
  for (const auto &v : cg.nodes)
    if (!index.count(v))
      visit(v);
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

void break_cycles(CallGraph &cg) {
  std::sort(cg.edges.begin(), cg.edges.end(),
            [](const CallEdge &a, const CallEdge &b) { return std::tie(a.caller, a.callee) < std::tie(b.caller, b.callee); });
  while (true) {
    bool any = false;
    for (const auto &scc : strongly_connected(cg)) {
      std::set<std::string> members(scc.begin(), scc.end());
      bool cyclic = scc.size() > 1;
      if (!cyclic)
        for (const auto &e : cg.edges)
          if (e.caller == scc[0] && e.callee == scc[0] && !cg.is_broken(e.caller, e.callee))
            cyclic = true;
      if (!cyclic)
        continue;
      auto calls = [&](const std::string &f) {
        auto it = cg.call_count.find(f);
        return it == cg.call_count.end() ? 0 : it->second;
      };
      std::string pick = *std::min_element(scc.begin(), scc.end(), [&](const std::string &a, const std::string &b) {
        return std::make_pair(calls(a), a) < std::make_pair(calls(b), b);
      });
      BreakStep step;
      step.function = pick;
      step.scc = scc;
      for (const auto &e : cg.edges)
        if (e.caller == pick && members.count(e.callee) && !cg.is_broken(e.caller, e.callee))
          step.removed.push_back(e);
      for (const auto &e : step.removed)
        cg.broken_edges.push_back(e);
      cg.break_steps.push_back(std::move(step));
      any = true;
    }
    if (!any)
      return;
  }
}

std::vector<std::string> topological_order(const CallGraph &cg) {
  std::map<std::string, int> pending; // callees not yet emitted
  std::map<std::string, std::vector<std::string>> callers;
  for (const auto &v : cg.nodes)
    pending[v] = 0;
  for (const auto &e : cg.edges) {
    if (cg.is_broken(e.caller, e.callee))
      continue;
    ++pending[e.caller];
    callers[e.callee].push_back(e.caller);
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto &[v, n] : pending)
    if (n == 0)
      ready.push(v);
  std::vector<std::string> order;
  std::set<std::string> done;
  while (!ready.empty()) {
    std::string v = ready.top();
    ready.pop();
    order.push_back(v);
    done.insert(v);
    for (const auto &c : callers[v])
      if (--pending[c] == 0)
        ready.push(c);
  }
  for (const auto &v : cg.nodes)
    if (!done.count(v))
      order.push_back(v); // unreachable once cycles are broken
  return order;
}

const FunctionSummary *callee_summary(const SummaryMap &summaries, const CallInfo &call) {
  if (call.indirect)
    return nullptr;
  auto it = summaries.find(call.callee);
  return it == summaries.end() ? nullptr : &it->second;
}

ParamStatus call_arg_status(const SummaryMap &summaries, const CallInfo &call, int index,
                            const std::set<std::string> &candidates) {
  if (!call.indirect) {
    auto it = summaries.find(call.callee);
    return it == summaries.end() ? ParamStatus::Maybe : it->second.status(index);
  }
  if (candidates.empty())
    return ParamStatus::Maybe;
  bool all_yes = true, all_no = true;
  for (const auto &c : candidates) {
    auto it = summaries.find(c);
    ParamStatus st = it == summaries.end() ? ParamStatus::Maybe : it->second.status(index);
    all_yes = all_yes && st == ParamStatus::Yes;
    all_no = all_no && st == ParamStatus::No;
  }
  return all_yes ? ParamStatus::Yes : all_no ? ParamStatus::No : ParamStatus::Maybe;
}

std::vector<int> transfer_sources(const CallInfo &call, const FunctionSummary *summary, int into) {
  std::vector<int> out;
  int n = static_cast<int>(call.args.size());
  if (!summary) {
    for (int i = 0; i < n; ++i)
      out.push_back(i);
    return out;
  }
  for (int p : summary->transfers_into(into)) {
    if (p == kVariadicArgs) {
      for (int i = static_cast<int>(summary->param_modified.size()); i < n; ++i)
        out.push_back(i);
    } else if (p >= 0 && p < n) {
      out.push_back(p);
    }
  }
  return out;
}

namespace {

const std::set<std::string> kNoCandidates;

const std::set<std::string> &candidates_at(const PointerTargets &targets, NodeId id) {
  auto it = targets.find(id);
  return it == targets.end() ? kNoCandidates : it->second;
}

// Parameters of `fn` whose incoming values flow into a value, following reaching
// definitions backwards inside the function.
class ParamOrigins {
public:
  ParamOrigins(const CodePropertyGraph &g, const SummaryMap &s) : g_(g), s_(s) {}

  void key_at(NodeId n, const std::string &k) { push({0, n, -1, -1, k}); }
  void call_result(NodeId n, int call) { push({1, n, call, -1, {}}); }
  void arg_value(NodeId n, int call, int arg) { push({2, n, call, arg, {}}); }

  std::set<int> run() {
    while (!work_.empty()) {
      Item it = work_.front();
      work_.erase(work_.begin());
      const CpgNode &node = g_.node(it.node);
      if (it.kind == 0) {
        for (const auto &d : g_.reaching(it.node, it.key))
          definition(d);
      } else if (it.kind == 1) {
        const CallInfo &c = node.calls.at(static_cast<std::size_t>(it.call));
        const FunctionSummary *s = callee_summary(s_, c);
        for (int p : transfer_sources(c, s, kReturnValue))
          arg_value(it.node, it.call, p);
      } else {
        const CallInfo &c = node.calls.at(static_cast<std::size_t>(it.call));
        if (it.arg >= static_cast<int>(c.args.size()))
          continue;
        const ArgInfo &a = c.args[static_cast<std::size_t>(it.arg)];
        for (const auto &r : a.value_reads)
          key_at(it.node, r);
        for (int vc : a.value_calls)
          call_result(it.node, vc);
      }
    }
    return params_;
  }

private:
  struct Item {
    int kind;
    NodeId node;
    int call, arg;
    std::string key;
    auto operator<=>(const Item &) const = default;
  };

  void push(Item it) {
    if (seen_.insert(it).second)
      work_.push_back(std::move(it));
  }

  void definition(const DefSite &d) {
    const CpgNode &dn = g_.node(d.node);
    const DefFact &f = g_.fact(d);
    if (f.origin == DefOrigin::Param) {
      params_.insert(dn.param_index);
      return;
    }
    if (f.origin == DefOrigin::CallOut) {
      const CallInfo &c = dn.calls.at(static_cast<std::size_t>(f.call));
      for (int p : transfer_sources(c, callee_summary(s_, c), f.arg))
        arg_value(d.node, f.call, p);
      return;
    }
    for (const auto &r : f.value_reads)
      key_at(d.node, r);
    for (int vc : f.value_calls)
      call_result(d.node, vc);
  }

  const CodePropertyGraph &g_;
  const SummaryMap &s_;
  std::vector<Item> work_;
  std::set<Item> seen_;
  std::set<int> params_;
};

class Summarizer {
public:
  Summarizer(const CodePropertyGraph &g, const SummaryMap &externals, const PointerTargets &targets, SummaryResult &out)
      : g_(g), externals_(externals), targets_(targets), out_(out) {}

  FunctionSummary summarize(const FunctionInfo &fn) {
    FunctionSummary s;
    s.name = fn.name;
    s.external = false;
    s.variadic = fn.ast->variadic;
    s.variadic_modified = ParamStatus::Maybe;
    const std::string &rt = fn.ast->return_type;
    s.returns_value = !(rt == "void" || (rt.size() > 5 && rt.compare(rt.size() - 5, 5, " void") == 0));
    for (std::size_t i = 0; i < fn.params.size(); ++i)
      s.param_modified.push_back(param_status(fn, static_cast<int>(i)));

    for (std::size_t i = 0; i < fn.params.size(); ++i) {
      if (s.param_modified[i] == ParamStatus::No)
        continue;
      ParamOrigins origins(g_, out_.summaries);
      seed_writes(fn, static_cast<int>(i), origins);
      for (int j : origins.run())
        if (j != static_cast<int>(i))
          s.param_transfers.push_back({j, static_cast<int>(i)});
    }
    ParamOrigins ret(g_, out_.summaries);
    for (NodeId id : fn.nodes)
      for (const auto &f : g_.node(id).facts)
        if (f.origin == DefOrigin::Return) {
          for (const auto &r : f.value_reads)
            ret.key_at(id, r);
          for (int vc : f.value_calls)
            ret.call_result(id, vc);
        }
    for (int j : ret.run())
      s.returns_param_data.push_back(j);
    return s;
  }

private:
  const std::string &param_name(const FunctionInfo &fn, int i) const {
    return fn.ast->parameters.at(static_cast<std::size_t>(i)).name;
  }

  bool internal_direct(const CallInfo &c) const {
    if (c.indirect || !g_.function(c.callee))
      return false;
    auto it = out_.summaries.find(c.callee);
    return it == out_.summaries.end() || !it->second.external;
  }

  void seed_writes(const FunctionInfo &fn, int i, ParamOrigins &origins) const {
    const std::string &name = param_name(fn, i);
    for (NodeId id : fn.nodes) {
      const CpgNode &n = g_.node(id);
      for (const auto &f : n.facts)
        if (f.through_pointer && f.pointer_base == name && f.origin != DefOrigin::CallOut) {
          for (const auto &r : f.value_reads)
            origins.key_at(id, r);
          for (int vc : f.value_calls)
            origins.call_result(id, vc);
        }
      for (std::size_t c = 0; c < n.calls.size(); ++c)
        for (const auto &a : n.calls[c].args)
          if (a.through_pointer && a.pointer_base == name) {
            const FunctionSummary *s = callee_summary(out_.summaries, n.calls[c]);
            std::vector<int> from;
            if (s) {
              for (int p : s->transfers_into(a.index))
                if (p >= 0)
                  from.push_back(p);
            }
            for (int p : from)
              origins.arg_value(id, static_cast<int>(c), p);
          }
    }
  }

  ParamStatus param_status(const FunctionInfo &fn, int i) {
    const Parameter &p = fn.ast->parameters.at(static_cast<std::size_t>(i));
    if (!p.pointer || p.name.empty())
      return ParamStatus::No;
    std::set<NodeId> definite;
    bool maybe = false;
    for (NodeId id : fn.nodes) {
      const CpgNode &n = g_.node(id);
      for (const auto &f : n.facts) {
        if (!f.through_pointer || f.pointer_base != p.name || f.origin == DefOrigin::CallOut)
          continue;
        if (f.definite)
          definite.insert(id);
        else
          maybe = true;
      }
      for (const auto &c : n.calls) {
        const auto &cands = candidates_at(targets_, id);
        if (c.indirect && cands.empty() && !warned_.count(id)) {
          warned_.insert(id);
          out_.warnings.push_back({"MissingSummary", "indirect call in " + fn.name + " at line " +
                                                         std::to_string(n.span.start_line) +
                                                         " has no candidate targets; arguments treated as maybe-modified"});
        }
        for (const auto &a : c.args) {
          if (!a.through_pointer || a.pointer_base != p.name)
            continue;
          ParamStatus st = call_arg_status(out_.summaries, c, a.index, cands);
          if (st == ParamStatus::Yes)
            definite.insert(id);
          else if (st == ParamStatus::Maybe && !internal_direct(c))
            maybe = true;
        }
      }
    }
    if (!definite.empty() && covers_all_paths(fn, definite))
      return ParamStatus::Yes;
    if (!definite.empty() || maybe)
      return ParamStatus::Maybe;
    return ParamStatus::No;
  }

  // Must-analysis: is one of `writers` executed on every path from Entry to Exit
  // (paths ending in a terminal call are ignored)?
  bool covers_all_paths(const FunctionInfo &fn, const std::set<NodeId> &writers) const {
    std::map<NodeId, bool> out;
    for (NodeId id : fn.nodes)
      out[id] = true;
    out[fn.entry] = writers.count(fn.entry) > 0;
    bool changed = true;
    while (changed) {
      changed = false;
      for (NodeId id : fn.nodes) {
        if (id == fn.entry)
          continue;
        bool in = true;
        for (NodeId p : g_.predecessors(id)) {
          if (id == fn.exit && g_.node(p).terminal)
            continue;
          in = in && out[p];
        }
        bool value = in || writers.count(id) > 0;
        if (value != out[id]) {
          out[id] = value;
          changed = true;
        }
      }
    }
    bool in_exit = true;
    for (NodeId p : g_.predecessors(fn.exit))
      if (!g_.node(p).terminal)
        in_exit = in_exit && out[p];
    return in_exit;
  }

  const CodePropertyGraph &g_;
  const SummaryMap &externals_;
  const PointerTargets &targets_;
  SummaryResult &out_;
  std::set<NodeId> warned_;
};

} // namespace

SummaryResult summarize_parameters(const CodePropertyGraph &graph, const CallGraph &cg,
                                   const std::vector<std::string> &order, const SummaryMap &externals,
                                   const PointerTargets &targets) {
  SummaryResult out;
  out.summaries = externals;
  Summarizer summarizer(graph, externals, targets, out);
  std::set<std::string> in_cycles;
  for (const auto &step : cg.break_steps)
    in_cycles.insert(step.scc.begin(), step.scc.end());

  for (const auto &name : order) {
    const FunctionInfo *fn = graph.function(name);
    if (!fn || externals.count(name))
      continue; // external summaries are never overwritten
    out.summaries[name] = summarizer.summarize(*fn);
  }
  // One refinement pass for functions whose callees were defaulted across a broken edge.
  for (const auto &name : order) {
    const FunctionInfo *fn = graph.function(name);
    if (!fn || externals.count(name) || !in_cycles.count(name))
      continue;
    FunctionSummary refined = summarizer.summarize(*fn);
    refined.confident = false;
    out.summaries[name] = std::move(refined);
  }
  return out;
}

void augment_dataflow(CodePropertyGraph &graph, const SummaryMap &summaries, const PointerTargets &targets) {
  for (auto &n : graph.nodes) {
    std::vector<DefFact> kept;
    for (auto &f : n.facts)
      if (f.origin != DefOrigin::CallOut)
        kept.push_back(std::move(f));
    n.facts = std::move(kept);
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      const CallInfo &call = n.calls[c];
      const auto &cands = candidates_at(targets, n.id);
      for (const auto &a : call.args) {
        if (a.key.empty() || !a.pointer_like)
          continue;
        ParamStatus st = call_arg_status(summaries, call, a.index, cands);
        if (st == ParamStatus::No)
          continue;
        DefFact f;
        f.key = a.key;
        f.origin = DefOrigin::CallOut;
        f.definite = st == ParamStatus::Yes;
        f.strong = st == ParamStatus::Yes && a.address_of && a.strong_target;
        f.through_pointer = a.through_pointer;
        f.pointer_base = a.pointer_base;
        f.call = static_cast<int>(c);
        f.arg = a.index;
        n.facts.push_back(std::move(f));
      }
    }
  }
  // Link resolved indirect calls.
  std::set<std::tuple<int, NodeId, NodeId, int>> present;
  for (const auto &e : graph.edges)
    if (e.kind == EdgeKind::CallsTo || e.kind == EdgeKind::ArgToParam)
      present.emplace(static_cast<int>(e.kind), e.src, e.dst, e.index);
  for (const auto &n : graph.nodes) {
    for (std::size_t c = 0; c < n.calls.size(); ++c) {
      if (!n.calls[c].indirect)
        continue;
      for (const auto &name : candidates_at(targets, n.id)) {
        const FunctionInfo *callee = graph.function(name);
        if (!callee)
          continue;
        if (present.emplace(static_cast<int>(EdgeKind::CallsTo), n.id, callee->entry, static_cast<int>(c)).second) {
          CpgEdge e;
          e.kind = EdgeKind::CallsTo;
          e.src = n.id;
          e.dst = callee->entry;
          e.index = static_cast<int>(c);
          graph.edges.push_back(e);
        }
        for (const auto &a : n.calls[c].args) {
          if (a.index >= static_cast<int>(callee->params.size()))
            continue;
          NodeId param = callee->params[static_cast<std::size_t>(a.index)];
          if (present.emplace(static_cast<int>(EdgeKind::ArgToParam), n.id, param, a.index).second) {
            CpgEdge e;
            e.kind = EdgeKind::ArgToParam;
            e.src = n.id;
            e.dst = param;
            e.index = a.index;
            graph.edges.push_back(e);
          }
        }
      }
    }
  }
  graph.recompute_dataflow();
}

InterprocResult run_interproc(CodePropertyGraph &graph, const SummaryMap &externals) {
  InterprocResult r;
  r.pointer_targets = resolve_function_pointers(graph);
  r.call_graph = build_call_graph(graph, r.pointer_targets);
  r.order = topological_order(r.call_graph);
  SummaryResult s = summarize_parameters(graph, r.call_graph, r.order, externals, r.pointer_targets);
  r.summaries = std::move(s.summaries);
  r.warnings = std::move(s.warnings);
  augment_dataflow(graph, r.summaries, r.pointer_targets);
  return r;
}

} // namespace bugforge
