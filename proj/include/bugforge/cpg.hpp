#pragma once

#include "bugforge/ast.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace bugforge {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

enum class NodeKind { Entry, Exit, Parameter, Statement, Condition, CallSite, ReturnStmt, Opaque };
enum class EdgeKind { AstChild, CfgNext, DfgReaches, CallsTo, ArgToParam };

const char *to_string(NodeKind kind);
const char *to_string(EdgeKind kind);

/// How a node defines a variable.
enum class DefOrigin {
  Param,    // the parameter's incoming value
  Init,     // declaration initializer
  Assign,   // plain `=`
  Compound, // `+=` and friends
  IncDec,   // ++ / --
  CallOut,  // written by a callee through an argument
  Return,   // the function's return value, key "$ret"
};

inline constexpr const char *kReturnKey = "$ret";

struct DefFact {
  std::string key; // variable key: identifier or member chain "s.m"
  DefOrigin origin = DefOrigin::Assign;
  bool strong = false;   // kills earlier definitions of key and its members
  bool definite = false; // happens unconditionally when the node executes
  bool through_pointer = false;
  std::string pointer_base; // root variable dereferenced, when through_pointer
  bool indexed = false;     // store into an element (a[i] = ...)
  bool zero_store = false;  // stored value is the literal 0 or '\0'
  std::vector<std::string> value_reads; // keys whose values flow into the definition
  std::vector<int> value_calls;         // indices into CpgNode::calls whose results flow in
  int call = -1;                        // CallOut: call index within the node
  int arg = -1;                         // CallOut: argument index
};

struct ArgInfo {
  int index = 0;
  const Expr *expr = nullptr;
  std::string key;            // variable the argument designates, if any
  bool address_of = false;    // passed as &key
  bool strong_target = false; // &key designates the whole variable (no index or dereference)
  bool pointer_like = false;  // key is passed by pointer (array, pointer, &x, p + n)
  bool through_pointer = false;
  std::string pointer_base;
  std::vector<std::string> reads;       // every key read by the argument expression
  std::vector<std::string> value_reads; // keys whose values become the argument value
  std::vector<int> value_calls;         // calls whose results become the argument value
  bool string_literal = false;
};

struct CallInfo {
  std::string callee; // empty for indirect calls
  bool indirect = false;
  const Expr *expr = nullptr;
  std::vector<ArgInfo> args;
  std::vector<std::string> callee_reads; // keys read to compute an indirect callee
};

struct CpgNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::Statement;
  std::string function;
  SourceSpan span;
  const Stmt *stmt = nullptr; // owning statement (the If/While/For for conditions and steps)
  const Expr *expr = nullptr; // condition, step or statement expression
  int param_index = -1;
  bool terminal = false; // calls exit/abort: only successor is the Exit node
  std::vector<DefFact> facts;
  std::vector<std::string> uses;
  std::vector<CallInfo> calls;
  std::vector<std::string> function_refs; // function names used as values

  [[nodiscard]] std::set<std::string> defs() const;
  [[nodiscard]] bool uses_key(const std::string &key) const;
};

struct CpgEdge {
  EdgeKind kind = EdgeKind::CfgNext;
  NodeId src = kNoNode;
  NodeId dst = kNoNode;
  std::string var;   // DfgReaches: the variable key
  std::string label; // CfgNext: "", "true", "false", "case", "default"
  int index = -1;    // ArgToParam: argument index; CallsTo: call index in src
};

struct Symbol {
  std::string type;
  bool pointer = false;
  bool array = false;
  bool is_param = false;
  bool integer = false;
};

struct FunctionInfo {
  std::string name;
  std::size_t unit = 0;
  const FunctionAst *ast = nullptr;
  NodeId entry = kNoNode;
  NodeId exit = kNoNode;
  std::vector<NodeId> params;
  std::vector<NodeId> nodes; // every node of the function, ascending
  std::map<std::string, Symbol> symbols;
};

/// A reaching definition: fact `fact` of node `node`.
struct DefSite {
  NodeId node = kNoNode;
  int fact = 0;
  bool operator==(const DefSite &) const = default;
  auto operator<=>(const DefSite &) const = default;
};

struct Diagnostic {
  std::string code;
  std::string message;
};

/// True if two keys denote overlapping storage ("s" overlaps "s.m").
bool keys_overlap(std::string_view a, std::string_view b);
/// Root variable of a key ("s" for "s.m.n").
std::string key_root(std::string_view key);

class CodePropertyGraph {
public:
  std::vector<CpgNode> nodes;
  std::vector<CpgEdge> edges;
  std::vector<FunctionInfo> functions;
  std::map<std::string, NodeId> function_index; // name -> entry node
  std::vector<std::shared_ptr<const TranslationUnit>> units;
  std::set<std::string> declared_functions; // defined or prototyped anywhere
  std::set<std::string> address_taken;      // in-corpus functions used as values
  std::map<std::string, Symbol> globals;
  std::vector<Diagnostic> diagnostics;

  [[nodiscard]] const CpgNode &node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] const FunctionInfo *function(std::string_view name) const;
  [[nodiscard]] const FunctionInfo &function_of(NodeId id) const;
  [[nodiscard]] const TranslationUnit &unit_of(NodeId id) const;

  [[nodiscard]] const std::vector<int> &out_edges(NodeId id) const { return out_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] const std::vector<int> &in_edges(NodeId id) const { return in_.at(static_cast<std::size_t>(id)); }
  /// CfgNext successors, ascending and deduplicated.
  [[nodiscard]] std::vector<NodeId> successors(NodeId id) const;
  [[nodiscard]] std::vector<NodeId> predecessors(NodeId id) const;

  /// Definitions reaching the start of `id` whose key overlaps `key`.
  [[nodiscard]] std::vector<DefSite> reaching(NodeId id, std::string_view key) const;
  /// Every definition reaching the start of `id`.
  [[nodiscard]] const std::vector<DefSite> &reaching_all(NodeId id) const { return rd_in_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] const DefFact &fact(const DefSite &d) const { return node(d.node).facts.at(static_cast<std::size_t>(d.fact)); }

  /// Recomputes reaching definitions and DfgReaches edges from the current node facts.
  void recompute_dataflow();
  void add_edge(CpgEdge e);
  void rebuild_adjacency();

  /// Line-oriented text export.
  [[nodiscard]] std::string dump() const;

private:
  std::vector<std::vector<int>> out_, in_;
  std::vector<std::vector<DefSite>> rd_in_;
  std::vector<int> function_of_node_;
  friend class CpgBuilder;
};

/// Builds the graph. Units are shared with the graph, which keeps AST pointers.
/// A function defined twice keeps its first definition and records a
/// DuplicateDefinition diagnostic.
CodePropertyGraph build_cpg(std::vector<std::shared_ptr<const TranslationUnit>> units);
CodePropertyGraph build_cpg(std::vector<TranslationUnit> units);

inline constexpr std::size_t kDefaultPathLimit = 1000;

/// Loop-free control-flow paths (each CfgNext edge at most once) from `from`
/// to `to`, lexicographically ordered by node id sequence, at most `limit`.
std::vector<std::vector<NodeId>> cfg_paths_between(const CodePropertyGraph &graph, NodeId from, NodeId to,
                                                   std::size_t limit = kDefaultPathLimit, bool *truncated = nullptr);

/// Shortest CfgNext path from `from` to `to` (ties broken lexicographically); empty if unreachable.
std::vector<NodeId> cfg_shortest_path(const CodePropertyGraph &graph, NodeId from, NodeId to);

/// True if `to` is reachable from `from` over CfgNext edges, never passing through `avoid`.
bool cfg_reachable(const CodePropertyGraph &graph, NodeId from, NodeId to, NodeId avoid = kNoNode);

/// Names of calls that terminate the process.
bool is_terminal_call(std::string_view callee);

} // namespace bugforge
