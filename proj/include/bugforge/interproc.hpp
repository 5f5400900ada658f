#pragma once

#include "bugforge/cpg.hpp"
#include "bugforge/summary.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace bugforge {

struct CallEdge {
  std::string caller;
  std::string callee;
  std::vector<NodeId> sites;
  bool external = false; // callee has no body in the corpus
  bool operator==(const CallEdge &) const = default;
};

/// One cycle-breaking decision: `function` had the fewest call sites among `scc`.
struct BreakStep {
  std::string function;
  std::vector<std::string> scc;
  std::vector<CallEdge> removed;
};

struct CallGraph {
  std::set<std::string> nodes;
  std::vector<CallEdge> edges;        // sorted by (caller, callee)
  std::vector<CallEdge> broken_edges; // removed to make the graph acyclic
  std::map<std::string, int> call_count; // call sites per function
  std::vector<BreakStep> break_steps;

  [[nodiscard]] bool is_broken(const std::string &caller, const std::string &callee) const;
  [[nodiscard]] std::vector<std::string> callees(const std::string &caller) const;
};

/// Function-pointer candidates per node holding an indirect call.
using PointerTargets = std::map<NodeId, std::set<std::string>>;

PointerTargets resolve_function_pointers(const CodePropertyGraph &graph);

/// Builds the call graph and breaks its cycles.
CallGraph build_call_graph(const CodePropertyGraph &graph);
CallGraph build_call_graph(const CodePropertyGraph &graph, const PointerTargets &targets);

/// Removes cycles: repeatedly, inside every cyclic strongly connected component,
/// the member with the fewest call sites (ties: name) loses its outgoing
/// intra-component edges. Usable on hand-built graphs.
void break_cycles(CallGraph &cg);

/// Callees before callers over non-broken edges; ready nodes are taken in name order.
std::vector<std::string> topological_order(const CallGraph &cg);

struct SummaryResult {
  SummaryMap summaries; // internal summaries plus the externals passed in
  std::vector<Diagnostic> warnings;
};

/// Derives parameter summaries for every in-corpus function in `order`.
SummaryResult summarize_parameters(const CodePropertyGraph &graph, const CallGraph &cg,
                                   const std::vector<std::string> &order, const SummaryMap &externals,
                                   const PointerTargets &targets);

/// Rewrites call-site definitions using the summaries (the data-flow
/// augmentation step), links resolved indirect calls, and recomputes
/// reaching definitions.
void augment_dataflow(CodePropertyGraph &graph, const SummaryMap &summaries, const PointerTargets &targets);

/// Summary that governs a call, or nullptr for unknown externals and indirect calls.
const FunctionSummary *callee_summary(const SummaryMap &summaries, const CallInfo &call);

/// Argument indices of `call` whose data moves into position `into` (an
/// argument index or kReturnValue). Unknown callees move every argument.
std::vector<int> transfer_sources(const CallInfo &call, const FunctionSummary *summary, int into);

/// Combined modification status of argument `index` of a call, considering
/// indirect candidates and unknown callees.
ParamStatus call_arg_status(const SummaryMap &summaries, const CallInfo &call, int index,
                            const std::set<std::string> &candidates);

/// Everything the later stages need from interprocedural analysis.
struct InterprocResult {
  CallGraph call_graph;
  std::vector<std::string> order;
  PointerTargets pointer_targets;
  SummaryMap summaries;
  std::vector<Diagnostic> warnings;
};

InterprocResult run_interproc(CodePropertyGraph &graph, const SummaryMap &externals);

} // namespace bugforge
