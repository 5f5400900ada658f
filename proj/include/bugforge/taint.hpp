#pragma once

#include "bugforge/interproc.hpp"

#include <string>
#include <vector>

namespace bugforge {

struct SinkSite {
  NodeId call_node = kNoNode;
  int call_index = 0; // position in CpgNode::calls
  std::string callee;
  int sensitive_arg_index = 0;
  VulnClass vuln_class = VulnClass::BufferLength;
  // A printf-family call whose literal "%s" format passes the argument through.
  // Not a sink by itself; traced so the format anti-pattern can be planned.
  bool latent = false;

  auto operator<=>(const SinkSite &) const = default;
};

struct SourceSite {
  NodeId call_node = kNoNode; // the parameter node for main's argv/envp
  int call_index = -1;
  std::string callee;
  SourceKind source_kind = SourceKind::File;
  int controlled_arg = kReturnValue;

  auto operator<=>(const SourceSite &) const = default;
};

/// How a definition-tree vertex was reached from its sink-ward neighbour.
enum class TraceCase { Sink, IncDec, Arithmetic, ReturnValue, ArgumentOut, Parameter, Use, Source };
const char *to_string(TraceCase c);

struct TreeVertex {
  enum class Kind { Root, Use, Def, CallResult, Source };
  Kind kind = Kind::Use;
  NodeId node = kNoNode;
  std::string var; // variable valid in the node's function ("$ret" for an unnamed call result)
  int fact = -1;   // Def: fact index
  int call = -1;   // CallResult / Source: call index
  TraceCase via = TraceCase::Use;
  int depth = 0; // function boundaries crossed from the sink
};

/// Backward search structure: `toward_sink[v]` lists the vertices v was derived from.
struct DefinitionTree {
  int root = 0;
  std::vector<TreeVertex> vertices;
  std::vector<std::vector<int>> toward_sink;
  std::vector<std::vector<int>> sources_of; // inverse of toward_sink
};

struct DataFlowPath {
  SinkSite sink;
  SourceSite source;
  std::vector<NodeId> hops;              // source call first, sink call last
  std::vector<std::string> hop_vars;     // label of hops[i] -> hops[i+1], named in hops[i]'s function
  std::vector<TraceCase> hop_cases;      // case by which hops[i] was reached
  std::vector<std::string> crossed_functions;

  auto operator<=>(const DataFlowPath &) const = default;
};

struct SourceSinkPair {
  SourceSite source;
  SinkSite sink;
  std::vector<DataFlowPath> paths;
};

struct TraceConfig {
  int max_depth = 64;
  std::size_t max_paths = 256;
  bool memoize = true;
  std::size_t max_vertices = 200000;
};

struct TraceResult {
  DefinitionTree tree;
  std::vector<DataFlowPath> paths; // sorted
  bool budget_exhausted = false;
  std::vector<Diagnostic> diagnostics; // DanglingDefinition, BudgetExhausted
};

/// Shared lookup tables for tracing; built once per analysed graph.
struct TaintContext {
  const CodePropertyGraph *graph = nullptr;
  const SummaryMap *summaries = nullptr;
  const PointerTargets *targets = nullptr;
  std::map<std::string, std::vector<std::pair<NodeId, int>>> call_sites; // callee -> (node, call index)
  std::map<std::string, std::vector<NodeId>> returns;                     // function -> return nodes

  TaintContext(const CodePropertyGraph &g, const SummaryMap &s, const PointerTargets &t);
  /// In-corpus functions a call may reach (direct callee or pointer candidates).
  [[nodiscard]] std::vector<const FunctionInfo *> internal_targets(NodeId node, const CallInfo &call) const;
};

std::vector<SinkSite> find_sensitive_sinks(const CodePropertyGraph &graph, const SummaryMap &summaries);
/// `printf("%s", x)`-shaped calls: candidates for the format-string anti-pattern.
std::vector<SinkSite> find_format_passthroughs(const CodePropertyGraph &graph, const SummaryMap &summaries);
std::vector<SourceSite> find_user_controlled_sources(const CodePropertyGraph &graph, const SummaryMap &summaries);

TraceResult trace_to_sources(const TaintContext &ctx, const SinkSite &sink, const TraceConfig &config = {});

std::vector<SourceSinkPair> group_pairs(const std::vector<DataFlowPath> &paths);

/// True if consecutive hops are joined by a data-flow, argument-binding or
/// return-binding relation of the augmented graph.
bool path_connected(const CodePropertyGraph &graph, const DataFlowPath &path);

struct TaintResult {
  std::vector<SinkSite> sinks;
  std::vector<SourceSite> sources;
  std::vector<SinkSite> passthroughs;
  std::vector<DataFlowPath> paths;             // over real sinks, sorted
  std::vector<DataFlowPath> passthrough_paths; // over latent sinks
  std::vector<SourceSinkPair> pairs;
  std::vector<SinkSite> truncated; // sinks whose trace hit a budget
  std::vector<Diagnostic> diagnostics;
};

TaintResult run_taint(const CodePropertyGraph &graph, const InterprocResult &ip, const TraceConfig &config = {});

} // namespace bugforge
